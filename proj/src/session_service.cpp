#include "qrec/session_service.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "qrec/error.hpp"

namespace qrec {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

fs::path resolve_path(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const fs::path& base_dir) {
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::InvalidConfig, "port out of range");
    if (j.contains("storage")) c.storage = resolve_path(base_dir, j["storage"].get<std::string>());
    if (j.contains("reference")) {
      const auto& r = j["reference"];
      if (r.contains("snapshot")) c.reference_snapshot = resolve_path(base_dir, r["snapshot"].get<std::string>());
      if (r.contains("schemas")) c.reference_schemas = resolve_path(base_dir, r["schemas"].get<std::string>());
      if (r.contains("queries")) c.reference_queries = resolve_path(base_dir, r["queries"].get<std::string>());
    }
    for (const auto& d : j.value("databases", json::array())) {
      DatabaseConfig db;
      db.id = d.at("id").get<std::string>();
      db.path = resolve_path(base_dir, d.at("path").get<std::string>());
      if (d.contains("domain_label")) db.domain_label = d["domain_label"].get<std::string>();
      c.databases.push_back(std::move(db));
    }
    if (j.contains("recommender")) c.recommender = RecommenderConfig::from_json(j["recommender"]);
    if (j.contains("embedder")) c.embedder = EmbedderConfig::from_json(j["embedder"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed service config: ") + e.what());
  }
  bool spider = c.reference_schemas.has_value() || c.reference_queries.has_value();
  if (c.reference_snapshot.has_value() == spider ||
      (spider && !(c.reference_schemas && c.reference_queries))) {
    throw Error(ErrorCode::InvalidConfig,
                "reference must name either a snapshot or both schemas and queries");
  }
  std::set<std::string> ids;
  for (const auto& d : c.databases) {
    if (!ids.insert(d.id).second) throw Error(ErrorCode::InvalidConfig, "duplicate database id '" + d.id + "'");
  }
  return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config " + path.string() + " is not valid JSON");
  return from_json(j, path.parent_path());
}

ReferenceRepository load_reference(const ServiceConfig& config) {
  if (config.reference_snapshot) return load_snapshot(*config.reference_snapshot);
  return load_log(*config.reference_schemas, *config.reference_queries);
}

// ---------------------------------------------------------------------------
// Service

struct SessionService::Database {
  DatabaseConfig config;
  CatalogPtr catalog;
};

struct SessionService::SessionState {
  std::mutex mu;
  SessionSnapshot data;
  const Database* db = nullptr;
  std::unique_ptr<SqliteBackend> backend;
  std::optional<RecommendationSet> last_served;
};

SessionService::SessionService(ServiceConfig config, std::shared_ptr<const ReferenceRepository> repository,
                               std::shared_ptr<const TextSimilarity> similarity)
    : config_(std::move(config)),
      repository_(std::move(repository)),
      similarity_(std::move(similarity)),
      rng_(std::random_device{}()) {
  config_.recommender.validate();
  for (const auto& d : config_.databases) {
    auto db = std::make_unique<Database>();
    db->config = d;
    db->catalog = std::make_shared<const SchemaCatalog>(load_sqlite_schema(d.path, d.domain_label));
    databases_.emplace(d.id, std::move(db));
  }
  replay();
  if (!config_.storage.parent_path().empty()) fs::create_directories(config_.storage.parent_path());
  log_.open(config_.storage, std::ios::app | std::ios::binary);
  if (!log_) throw Error(ErrorCode::StorageError, "cannot open event log " + config_.storage.string());
}

SessionService::SessionService(ServiceConfig config)
    : SessionService(config, std::make_shared<const ReferenceRepository>(load_reference(config)),
                     std::make_shared<const TextSimilarity>(make_embedder(config.embedder))) {}

SessionService::~SessionService() = default;

void SessionService::replay() {
  std::ifstream in(config_.storage, std::ios::binary);
  if (!in) return;
  std::string line;
  std::uintmax_t good_bytes = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // An event is committed by its newline. A crash mid-write leaves one
    // unterminated trailing line, which is dropped.
    if (in.eof()) break;
    json event = json::parse(line, nullptr, false);
    if (event.is_discarded()) {
      throw Error(ErrorCode::StorageError, "event log line " + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      const std::string kind = event.at("event").get<std::string>();
      if (kind == "session_created") {
        auto state = std::make_shared<SessionState>();
        state->data.id = event.at("session_id").get<std::string>();
        state->data.database_id = event.at("database_id").get<std::string>();
        state->data.created_at = event.at("created_at").get<std::string>();
        state->db = &database(state->data.database_id);
        sessions_[state->data.id] = std::move(state);
      } else if (kind == "query_submitted") {
        auto it = sessions_.find(event.at("session_id").get<std::string>());
        if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "query for unknown session");
        auto& s = *it->second;
        s.data.history.push_back(entry_from_json(event.at("entry"), s.db->catalog));
        if (s.data.history.back().index + 1 != s.data.history.size()) {
          throw Error(ErrorCode::StorageError, "history indices out of order");
        }
      } else if (kind == "dashboard_saved") {
        Dashboard d = dashboard_from_json(event.at("dashboard"));
        dashboards_[d.id] = std::move(d);
      } else {
        throw Error(ErrorCode::StorageError, "unknown event '" + kind + "'");
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::StorageError,
                  "event log line " + std::to_string(line_no) + ": " + std::string(e.what()));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::StorageError,
                  "event log line " + std::to_string(line_no) + ": " + std::string(e.what()));
    }
    good_bytes += line.size() + 1;
  }
  in.close();
  if (good_bytes != fs::file_size(config_.storage)) fs::resize_file(config_.storage, good_bytes);
}

void SessionService::append_event(const json& event) {
  std::lock_guard lock(log_mu_);
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) throw Error(ErrorCode::StorageError, "failed to write event log " + config_.storage.string());
}

const SessionService::Database& SessionService::database(const std::string& id) const {
  auto it = databases_.find(id);
  if (it == databases_.end()) throw Error(ErrorCode::UnknownDatabase, "unknown database '" + id + "'");
  return *it->second;
}

std::shared_ptr<SessionService::SessionState> SessionService::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
  return it->second;
}

RecommenderContext SessionService::context(const Database& db) const {
  return {db.catalog, repository_.get(), similarity_.get()};
}

RecommendationSet SessionService::compute_recommendations(SessionState& state) const {
  std::vector<QueryIR> history;
  for (const auto& e : state.data.history) history.push_back(e.query);
  return recommend_next(history, context(*state.db), config_.recommender);
}

std::string SessionService::fresh_id(std::string_view prefix) {
  std::lock_guard lock(id_mu_);
  std::ostringstream out;
  out << prefix << std::hex << std::setfill('0') << std::setw(16) << rng_();
  return out.str();
}

json SessionService::databases() const {
  json out = json::array();
  for (const auto& [id, db] : databases_) {
    json tables = json::array();
    for (const auto& t : db->catalog->tables()) {
      json columns = json::array();
      for (const auto& c : t.columns) {
        columns.push_back({{"name", c.name}, {"display_text", c.display_text}, {"value_kind", to_string(c.kind)}});
      }
      json table = {{"name", t.name}, {"display_text", t.display_text}, {"columns", columns}};
      if (t.primary_key) table["primary_key"] = *t.primary_key;
      tables.push_back(std::move(table));
    }
    json edges = json::array();
    for (const auto& e : db->catalog->fk_edges()) {
      edges.push_back({{"from", e.from.qualified()}, {"to", e.to.qualified()}});
    }
    out.push_back({{"id", id}, {"domain_label", db->catalog->domain_label()}, {"tables", tables}, {"fk_edges", edges}});
  }
  return out;
}

std::pair<SessionSnapshot, RecommendationSet> SessionService::create_session(const std::string& database_id) {
  const Database& db = database(database_id);
  auto state = std::make_shared<SessionState>();
  state->db = &db;
  state->data.database_id = database_id;
  state->data.created_at = utc_now();
  RecommendationSet initial = recommend_initial(context(db), config_.recommender);
  state->last_served = initial;

  std::unique_lock lock(sessions_mu_);
  do {
    state->data.id = fresh_id("s_");
  } while (sessions_.count(state->data.id));
  append_event({{"event", "session_created"},
                {"session_id", state->data.id},
                {"database_id", database_id},
                {"created_at", state->data.created_at}});
  sessions_[state->data.id] = state;
  return {state->data, std::move(initial)};
}

SubmitResult SessionService::submit_query(const std::string& session_id, const QueryInput& input) {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mu);

  QueryIR query;
  if (const auto* index = std::get_if<std::size_t>(&input)) {
    if (!state->last_served) state->last_served = compute_recommendations(*state);
    if (*index >= state->last_served->items.size()) {
      throw Error(ErrorCode::StaleRecommendationIndex,
                  "recommendation " + std::to_string(*index) + " is not in the last served set of " +
                      std::to_string(state->last_served->items.size()));
    }
    query = state->last_served->items[*index].query;
  } else {
    query = parse_sql(std::get<std::string>(input), state->db->catalog);
    if (query.lossy) {
      // Reference logs may drop clauses; a user's query must run as written.
      throw Error(ErrorCode::SyntaxError,
                  "submitted queries must stay within SELECT ... FROM ... GROUP BY without filters, "
                  "ordering, limits, DISTINCT, '*' or set operations");
    }
  }

  if (!state->backend) state->backend = std::make_unique<SqliteBackend>(state->db->config.path);
  ResultTable result = execute(query, *state->backend);
  HistoryEntry entry = make_entry(state->data.history.size(), std::move(query), std::move(result));

  append_event({{"event", "query_submitted"}, {"session_id", session_id}, {"entry", to_json(entry)}});
  state->data.history.push_back(entry);
  state->last_served = compute_recommendations(*state);
  return {std::move(entry), *state->last_served};
}

RecommendationSet SessionService::recommendations(const std::string& session_id) {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mu);
  if (!state->last_served) state->last_served = compute_recommendations(*state);
  return *state->last_served;
}

SessionSnapshot SessionService::session(const std::string& session_id) const {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mu);
  return state->data;
}

HistoryEntry SessionService::restore(const std::string& session_id, std::size_t index) const {
  auto state = find_session(session_id);
  std::lock_guard lock(state->mu);
  if (index >= state->data.history.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "history index " + std::to_string(index) + " out of range (" +
                                                std::to_string(state->data.history.size()) + " entries)");
  }
  return state->data.history[index];
}

Dashboard SessionService::save_dashboard(const std::string& session_id, std::vector<GridCell> cells) {
  auto state = find_session(session_id);
  Dashboard d;
  d.session_id = session_id;
  d.cells = std::move(cells);
  {
    std::lock_guard lock(state->mu);
    validate_cells(d.cells, state->data.history.size());
  }
  std::unique_lock lock(dashboards_mu_);
  do {
    d.id = fresh_id("d_");
  } while (dashboards_.count(d.id));
  append_event({{"event", "dashboard_saved"}, {"dashboard", to_json(d)}});
  dashboards_[d.id] = d;
  return d;
}

Dashboard SessionService::load_dashboard(const std::string& dashboard_id) const {
  std::shared_lock lock(dashboards_mu_);
  auto it = dashboards_.find(dashboard_id);
  if (it == dashboards_.end()) throw Error(ErrorCode::UnknownDashboard, "unknown dashboard '" + dashboard_id + "'");
  return it->second;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

}  // namespace qrec
