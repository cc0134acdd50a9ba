#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace qrec {

inline constexpr std::size_t kDefaultEmbeddingDimension = 256;

/// Unit-normalized dense vector.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  /// Normalizes `values`; throws EmptyText for an all-zero input.
  static EmbeddingVector normalized(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  EmbeddingVector operator-() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Dot product of two unit vectors, clamped to [-1, 1]. Throws DimensionMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EmbedderConfig {
  enum class Provider { LexicalDefault, ExternalService };

  Provider provider = Provider::LexicalDefault;
  std::size_t dimension = kDefaultEmbeddingDimension;
  std::optional<std::string> service_endpoint;
  double timeout_seconds = 5.0;
  int retries = 2;

  /// Throws InvalidConfig.
  void validate() const;
  static EmbedderConfig from_json(const nlohmann::json& j);
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  /// Throws EmptyText when `text` carries no alphanumeric content.
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

/// Hashed character-trigram embedder. Text is split on non-alphanumerics and
/// camelCase boundaries, lowercased, and each `^token$` trigram is hashed with
/// 64-bit FNV-1a into `hash mod dimension`, signed by bit 63.
class LexicalEmbedder final : public Embedder {
 public:
  explicit LexicalEmbedder(std::size_t dimension = kDefaultEmbeddingDimension);
  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(std::string_view text) const override;

  static std::vector<std::string> tokenize(std::string_view text);
  static std::uint64_t fnv1a64(std::string_view bytes);

 private:
  std::size_t dimension_;
};

/// JSON-over-HTTP provider: POST `{"texts": [...]}` and expect
/// `{"vectors": [[...], ...]}` in the same order.
class ServiceEmbedder final : public Embedder {
 public:
  explicit ServiceEmbedder(EmbedderConfig config);
  std::size_t dimension() const override { return config_.dimension; }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  EmbedderConfig config_;
  std::string base_url_;
  std::string path_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config);

/// Memoizing text similarity. Keys are unordered text pairs; the cosine is
/// always evaluated in a canonical argument order so cached and uncached
/// results are bit-identical and symmetric. Safe for concurrent callers.
class TextSimilarity {
 public:
  explicit TextSimilarity(std::shared_ptr<const Embedder> embedder =
                              std::make_shared<LexicalEmbedder>());

  double operator()(std::string_view a, std::string_view b) const;
  double uncached(std::string_view a, std::string_view b) const;
  EmbeddingVector embed(std::string_view text) const;

  std::size_t cached_pairs() const;
  const Embedder& embedder() const { return *embedder_; }

 private:
  std::shared_ptr<const Embedder> embedder_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, double> pairs_;
  mutable std::unordered_map<std::string, EmbeddingVector> vectors_;
};

}  // namespace qrec
