#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qrec/embedding.hpp"
#include "qrec/executor.hpp"
#include "qrec/recommender.hpp"
#include "qrec/reference_repository.hpp"
#include "qrec/session.hpp"

namespace qrec {

struct DatabaseConfig {
  std::string id;
  std::filesystem::path path;
  std::optional<std::string> domain_label;
};

/// Service configuration file; see docs/formats.md. Relative paths are
/// resolved against the directory of the file they were read from.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path storage = "qrec-events.jsonl";
  std::optional<std::filesystem::path> reference_snapshot;
  std::optional<std::filesystem::path> reference_schemas;
  std::optional<std::filesystem::path> reference_queries;
  std::vector<DatabaseConfig> databases;
  RecommenderConfig recommender;
  EmbedderConfig embedder;

  /// Throws InvalidConfig.
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);
};

struct SessionSnapshot {
  std::string id;
  std::string database_id;
  std::string created_at;
  std::vector<HistoryEntry> history;
};

struct SubmitResult {
  HistoryEntry entry;
  RecommendationSet recommendations;
};

/// Either SQL text or an index into the last-served recommendations.
using QueryInput = std::variant<std::string, std::size_t>;

/// Exploration sessions with an append-only JSON-lines event log. Requests on
/// different sessions run concurrently; requests on one session serialize.
class SessionService {
 public:
  SessionService(ServiceConfig config, std::shared_ptr<const ReferenceRepository> repository,
                 std::shared_ptr<const TextSimilarity> similarity);
  /// Loads the reference log and embedder named in `config`.
  explicit SessionService(ServiceConfig config);
  ~SessionService();

  /// Catalog summaries of every registered database.
  nlohmann::json databases() const;

  /// Throws UnknownDatabase.
  std::pair<SessionSnapshot, RecommendationSet> create_session(const std::string& database_id);
  /// Throws UnknownSession, SyntaxError and friends, StaleRecommendationIndex,
  /// BackendError, SchemaDrift.
  SubmitResult submit_query(const std::string& session_id, const QueryInput& input);
  RecommendationSet recommendations(const std::string& session_id);
  SessionSnapshot session(const std::string& session_id) const;
  /// Stored entry, never re-executed. Throws IndexOutOfRange.
  HistoryEntry restore(const std::string& session_id, std::size_t index) const;

  Dashboard save_dashboard(const std::string& session_id, std::vector<GridCell> cells);
  Dashboard load_dashboard(const std::string& dashboard_id) const;

  const ServiceConfig& config() const { return config_; }
  std::size_t session_count() const;

 private:
  struct Database;
  struct SessionState;

  void replay();
  void append_event(const nlohmann::json& event);
  std::shared_ptr<SessionState> find_session(const std::string& id) const;
  const Database& database(const std::string& id) const;
  RecommenderContext context(const Database& db) const;
  RecommendationSet compute_recommendations(SessionState& state) const;
  std::string fresh_id(std::string_view prefix);

  ServiceConfig config_;
  std::shared_ptr<const ReferenceRepository> repository_;
  std::shared_ptr<const TextSimilarity> similarity_;
  std::map<std::string, std::unique_ptr<Database>> databases_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  mutable std::shared_mutex dashboards_mu_;
  std::map<std::string, Dashboard> dashboards_;

  std::mutex log_mu_;
  std::ofstream log_;
  std::mutex id_mu_;
  std::mt19937_64 rng_;
};

/// Loads the reference repository named by `config`: a snapshot, or Spider
/// schemas plus query records.
ReferenceRepository load_reference(const ServiceConfig& config);

}  // namespace qrec
