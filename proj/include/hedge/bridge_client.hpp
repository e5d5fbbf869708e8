// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP clients for the model bridge.
//
//   POST /embed  {"texts": [...]}            -> {"dim": d, "vectors": [[...], ...]}
//   POST /nli    {"pairs": [["p","h"], ...]} -> {"labels": [...], "probs": [[e,c,n], ...]?}
//   GET  /health                             -> {"embed_model": ..., "nli_model": ..., "dim": d}
//
// When "probs" is present it decides the label (argmax, ties entails >
// contradicts > neutral); otherwise "labels" is used.

#include <cstdlib>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedge/errors.hpp"
#include "hedge/judges.hpp"
#include "httplib.h"
#include "json.hpp"

namespace hedge {

inline constexpr const char* kBridgeUrlEnv = "HEDGE_BRIDGE_URL";

// Flag value wins over the environment; empty result means "not configured".
inline std::string resolve_bridge_url(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kBridgeUrlEnv); env != nullptr) return env;
  return {};
}

namespace wire {

inline nlohmann::json embed_request(std::span<const std::string> texts) {
  return {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
}

inline nlohmann::json nli_request(std::span<const TextPair> pairs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [p, h] : pairs) arr.push_back({p, h});
  return {{"pairs", std::move(arr)}};
}

inline std::vector<EmbeddingVector> parse_embed_response(const nlohmann::json& j, std::size_t expected) {
  if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array()) {
    throw ProtocolError("/embed response missing 'vectors' array");
  }
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    throw ProtocolError("/embed response missing integer 'dim'");
  }
  const auto dim = j["dim"].get<std::size_t>();
  const auto& rows = j["vectors"];
  if (rows.size() != expected) {
    throw ProtocolError("/embed returned " + std::to_string(rows.size()) + " vectors, expected " +
                        std::to_string(expected));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array()) throw ProtocolError("/embed vector is not an array");
    if (row.size() != dim) {
      throw DimensionMismatch("/embed vector has " + std::to_string(row.size()) + " entries, dim is " +
                              std::to_string(dim));
    }
    EmbeddingVector v;
    v.values.reserve(dim);
    for (const auto& x : row) {
      if (!x.is_number()) throw ProtocolError("/embed vector entry is not a number");
      v.values.push_back(x.get<double>());
    }
    out.push_back(normalized(std::move(v)));
  }
  return out;
}

inline std::vector<EntailmentLabel> parse_nli_response(const nlohmann::json& j, std::size_t expected) {
  if (!j.is_object()) throw ProtocolError("/nli response is not an object");
  std::vector<EntailmentLabel> out;
  out.reserve(expected);
  if (j.contains("probs") && !j["probs"].is_null()) {
    const auto& rows = j["probs"];
    if (!rows.is_array() || rows.size() != expected) throw ProtocolError("/nli 'probs' has wrong shape");
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != 3) throw ProtocolError("/nli probability row must have 3 entries");
      std::vector<double> p;
      for (const auto& x : row) {
        if (!x.is_number()) throw ProtocolError("/nli probability is not a number");
        p.push_back(x.get<double>());
      }
      out.push_back(label_from_probs(p));
    }
    return out;
  }
  if (!j.contains("labels") || !j["labels"].is_array()) throw ProtocolError("/nli response missing 'labels'");
  const auto& labels = j["labels"];
  if (labels.size() != expected) {
    throw ProtocolError("/nli returned " + std::to_string(labels.size()) + " labels, expected " +
                        std::to_string(expected));
  }
  for (const auto& l : labels) {
    if (!l.is_string()) throw ProtocolError("/nli label is not a string");
    auto parsed = parse_entailment_label(l.get<std::string>());
    if (!parsed) throw ProtocolError("/nli unknown label '" + l.get<std::string>() + "'");
    out.push_back(*parsed);
  }
  return out;
}

}  // namespace wire

struct BridgeHealth {
  std::string embed_model;
  std::string nli_model;
  std::size_t dim = 0;
};

// One httplib::Client per request so instances are safe to share between
// worker threads.
class BridgeClient {
 public:
  explicit BridgeClient(std::string base_url, int timeout_seconds = 600)
      : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    if (base_url_.empty()) {
      throw JudgeUnavailable(std::string("no bridge URL configured (set --bridge-url or ") + kBridgeUrlEnv + ")");
    }
  }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    auto cli = make_client();
    auto res = cli->Post(path, body.dump(), "application/json");
    return decode(res, path);
  }

  nlohmann::json get(const std::string& path) const {
    auto cli = make_client();
    auto res = cli->Get(path);
    return decode(res, path);
  }

  BridgeHealth health() const {
    auto j = get("/health");
    BridgeHealth h;
    try {
      h.embed_model = j.value("embed_model", "");
      h.nli_model = j.value("nli_model", "");
      h.dim = j.value("dim", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("/health: ") + e.what());
    }
    return h;
  }

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::unique_ptr<httplib::Client> make_client() const {
    auto cli = std::make_unique<httplib::Client>(base_url_);
    if (!cli->is_valid()) throw JudgeUnavailable("invalid bridge URL: " + base_url_);
    cli->set_connection_timeout(10);
    cli->set_read_timeout(timeout_seconds_);
    cli->set_write_timeout(timeout_seconds_);
    return cli;
  }

  nlohmann::json decode(const httplib::Result& res, const std::string& path) const {
    if (!res) {
      throw JudgeUnavailable("bridge " + base_url_ + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw JudgeUnavailable("bridge " + base_url_ + path + ": HTTP " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError("bridge " + path + ": malformed JSON: " + e.what());
    }
  }

  std::string base_url_;
  int timeout_seconds_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(const BridgeClient& client) : client_(client) {}

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    auto j = client_.post("/embed", wire::embed_request(texts));
    return wire::parse_embed_response(j, texts.size());
  }

 private:
  const BridgeClient& client_;
};

class HttpEntailmentJudge final : public EntailmentJudge {
 public:
  explicit HttpEntailmentJudge(const BridgeClient& client) : client_(client) {}

  std::vector<EntailmentLabel> judge(std::span<const TextPair> pairs) override {
    auto j = client_.post("/nli", wire::nli_request(pairs));
    return wire::parse_nli_response(j, pairs.size());
  }

 private:
  const BridgeClient& client_;
};

}  // namespace hedge
