#include "qrec/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>

#include <httplib.h>

#include "qrec/error.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (!(sq > 0.0)) throw Error(ErrorCode::EmptyText, "cannot normalize a zero vector");
  double norm = std::sqrt(sq);
  for (double& v : values) v /= norm;
  EmbeddingVector out;
  out.values_ = std::move(values);
  return out;
}

EmbeddingVector EmbeddingVector::operator-() const {
  EmbeddingVector out = *this;
  for (double& v : out.values_) v = -v;
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine over vectors of size " +
                                                  std::to_string(a.size()) + " and " +
                                                  std::to_string(b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

void EmbedderConfig::validate() const {
  if (dimension == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
  if (provider == Provider::ExternalService && (!service_endpoint || service_endpoint->empty())) {
    throw Error(ErrorCode::InvalidConfig, "external_service provider requires service_endpoint");
  }
  if (timeout_seconds <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
  if (retries < 0) throw Error(ErrorCode::InvalidConfig, "retries must be non-negative");
}

EmbedderConfig EmbedderConfig::from_json(const nlohmann::json& j) {
  EmbedderConfig c;
  try {
    std::string provider = j.value("provider", "lexical_default");
    if (provider == "lexical_default") {
      c.provider = Provider::LexicalDefault;
    } else if (provider == "external_service") {
      c.provider = Provider::ExternalService;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown embedding provider '" + provider + "'");
    }
    c.dimension = j.value("dimension", kDefaultEmbeddingDimension);
    if (j.contains("service_endpoint")) c.service_endpoint = j["service_endpoint"].get<std::string>();
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.retries = j.value("retries", c.retries);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("embedder config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

// ---------------------------------------------------------------------------

LexicalEmbedder::LexicalEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

std::vector<std::string> LexicalEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::exchange(current, {}));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (std::isupper(c) && i > 0) {
      unsigned char prev = static_cast<unsigned char>(text[i - 1]);
      if (std::islower(prev) || std::isdigit(prev)) flush();
    }
    current += static_cast<char>(std::tolower(c));
  }
  flush();
  return tokens;
}

std::uint64_t LexicalEmbedder::fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EmbeddingVector LexicalEmbedder::embed(std::string_view text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
  std::vector<double> acc(dimension_, 0.0);
  for (const auto& token : tokens) {
    std::string padded = "^" + token + "$";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
      acc[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  return EmbeddingVector::normalized(std::move(acc));
}

// ---------------------------------------------------------------------------

ServiceEmbedder::ServiceEmbedder(EmbedderConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::string& url = *config_.service_endpoint;
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  base_url_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

EmbeddingVector ServiceEmbedder::embed(std::string_view text) const {
  std::string s(text);
  return embed_batch(std::span<const std::string>(&s, 1)).front();
}

std::vector<EmbeddingVector> ServiceEmbedder::embed_batch(std::span<const std::string> texts) const {
  for (const auto& t : texts) {
    if (trim(t).empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
  }
  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  httplib::Client client(base_url_);
  auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      auto doc = nlohmann::json::parse(res->body);
      const auto& vectors = doc.at("vectors");
      if (vectors.size() != texts.size()) {
        throw Error(ErrorCode::EmbeddingServiceError, "service returned " +
                                                          std::to_string(vectors.size()) +
                                                          " vectors for " +
                                                          std::to_string(texts.size()) + " texts");
      }
      std::vector<EmbeddingVector> out;
      for (const auto& v : vectors) {
        auto values = v.get<std::vector<double>>();
        if (values.size() != config_.dimension) {
          throw Error(ErrorCode::DimensionMismatch,
                      "service vector has dimension " + std::to_string(values.size()) +
                          ", expected " + std::to_string(config_.dimension));
        }
        out.push_back(EmbeddingVector::normalized(std::move(values)));
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::EmbeddingServiceError, std::string("bad service response: ") + e.what());
    }
  }
  throw Error(ErrorCode::EmbeddingServiceError, "embedding service unavailable: " + last_error);
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config) {
  config.validate();
  if (config.provider == EmbedderConfig::Provider::ExternalService) {
    return std::make_shared<ServiceEmbedder>(config);
  }
  return std::make_shared<LexicalEmbedder>(config.dimension);
}

// ---------------------------------------------------------------------------

TextSimilarity::TextSimilarity(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)) {}

EmbeddingVector TextSimilarity::embed(std::string_view text) const {
  std::string key(text);
  {
    std::shared_lock lock(mutex_);
    if (auto it = vectors_.find(key); it != vectors_.end()) return it->second;
  }
  EmbeddingVector v = embedder_->embed(text);
  std::unique_lock lock(mutex_);
  return vectors_.try_emplace(std::move(key), std::move(v)).first->second;
}

double TextSimilarity::uncached(std::string_view a, std::string_view b) const {
  if (a == b) {
    embedder_->embed(a);
    return 1.0;
  }
  if (b < a) std::swap(a, b);
  return cosine(embedder_->embed(a), embedder_->embed(b));
}

double TextSimilarity::operator()(std::string_view a, std::string_view b) const {
  if (a == b) {
    embed(a);  // still rejects empty text
    return 1.0;
  }
  if (b < a) std::swap(a, b);
  std::string key;
  key.reserve(a.size() + b.size() + 1);
  key.append(a).push_back('\x1f');
  key.append(b);
  {
    std::shared_lock lock(mutex_);
    if (auto it = pairs_.find(key); it != pairs_.end()) return it->second;
  }
  double value = cosine(embed(a), embed(b));
  std::unique_lock lock(mutex_);
  pairs_.try_emplace(std::move(key), value);
  return value;
}

std::size_t TextSimilarity::cached_pairs() const {
  std::shared_lock lock(mutex_);
  return pairs_.size();
}

}  // namespace qrec
