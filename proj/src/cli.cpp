#include "qrec/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>

#include "qrec/error.hpp"
#include "qrec/executor.hpp"
#include "qrec/http_server.hpp"
#include "qrec/recommender.hpp"
#include "qrec/reference_repository.hpp"
#include "qrec/session.hpp"
#include "qrec/session_service.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string db;
  std::string log;
  std::string schemas;
  std::string config;
  std::string out;
  std::string domain;
  std::optional<std::size_t> top_k;
  std::optional<int> port;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedFile, path.string() + " is not valid JSON");
  return j;
}

// --config, else $QREC_CONFIG, else nothing.
std::optional<fs::path> config_path(const Options& o) {
  if (!o.config.empty()) return fs::path(o.config);
  if (const char* env = std::getenv("QREC_CONFIG"); env && *env) return fs::path(env);
  return std::nullopt;
}

struct Settings {
  RecommenderConfig recommender;
  EmbedderConfig embedder;
  std::optional<ServiceConfig> service;
};

Settings load_settings(const Options& o) {
  Settings s;
  if (auto path = config_path(o)) {
    json j = read_json(*path);
    if (j.contains("recommender")) s.recommender = RecommenderConfig::from_json(j["recommender"]);
    if (j.contains("embedder")) s.embedder = EmbedderConfig::from_json(j["embedder"]);
    if (j.contains("reference")) s.service = ServiceConfig::from_json(j, path->parent_path());
  }
  if (o.top_k) s.recommender.top_k = *o.top_k;
  s.recommender.validate();
  s.embedder.validate();
  return s;
}

ReferenceRepository load_repository(const Options& o, const Settings& s) {
  if (o.log.empty()) {
    if (s.service) return load_reference(*s.service);
    throw UsageError("--log is required (or a config file with a 'reference' section)");
  }
  if (!o.schemas.empty()) return load_log(o.schemas, o.log);
  json j = read_json(o.log);
  if (!j.is_object() || !j.contains("format")) {
    throw UsageError("--log " + o.log + " is not a repository snapshot; pass --schemas for Spider query files");
  }
  return repository_from_snapshot(j);
}

CatalogPtr load_catalog(const Options& o) {
  if (o.db.empty()) throw UsageError("--db is required");
  std::optional<std::string> label;
  if (!o.domain.empty()) label = o.domain;
  fs::path path(o.db);
  if (path.extension() == ".json") {
    auto catalog = load_spider_schema(path);
    return std::make_shared<const SchemaCatalog>(label ? catalog.with_domain_label(*label) : catalog);
  }
  return std::make_shared<const SchemaCatalog>(load_sqlite_schema(path, label));
}

void print_recommendations(std::ostream& out, const RecommendationSet& set) {
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const auto& r = set.items[i];
    if (i > 0) out << '\n';
    out << '[' << i << "] " << r.nl_text << '\n'
        << "    score: " << std::fixed << std::setprecision(6) << r.score << '\n'
        << "    sql:   " << r.sql << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

std::string cell_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::ostringstream s;
          s << x;
          return s.str();
        }
      },
      v);
}

void print_table(std::ostream& out, const ResultTable& t, std::size_t max_rows = 20) {
  std::vector<std::size_t> width;
  for (const auto& c : t.columns) width.push_back(c.name.size());
  std::size_t shown = std::min(max_rows, t.rows.size());
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = std::max(width[c], cell_text(t.rows[r][c]).size());
  }
  auto line = [&](auto cell) {
    out << "  ";
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << cell(c) << (c + 1 < t.columns.size() ? "  " : "");
    }
    out << '\n';
  };
  line([&](std::size_t c) { return t.columns[c].name; });
  for (std::size_t r = 0; r < shown; ++r) line([&](std::size_t c) { return cell_text(t.rows[r][c]); });
  if (t.rows.size() > shown) out << "  ... " << t.rows.size() - shown << " more rows\n";
  out << std::right;
}

int cmd_recommend(const Options& o, std::ostream& out, std::ostream& err) {
  auto catalog = load_catalog(o);
  Settings s = load_settings(o);
  auto repo = load_repository(o, s);
  TextSimilarity sim(make_embedder(s.embedder));
  auto set = recommend_initial({catalog, &repo, &sim}, s.recommender);
  if (set.fallback) err << "qrec: no column matched the reference log; ranked by raw similarity\n";
  print_recommendations(out, set);
  return 0;
}

int cmd_mine(const Options& o, std::ostream& out) {
  Settings s = load_settings(o);
  auto repo = load_repository(o, s);
  TextSimilarity sim(make_embedder(s.embedder));
  const double threshold = s.recommender.binarization_threshold;

  json domains = json::array();
  for (const auto& group : repo.groups()) {
    std::vector<RelevanceVector> vectors;
    for (const auto& col : group.schema->all_columns()) {
      vectors.push_back(column_relevance_vector(col, *group.schema, group.queries, ActionKind::Selection,
                                                threshold, sim));
    }
    std::size_t occurrences = reference_occurrences(group.queries, ActionKind::Selection).size();
    json itemsets = json::array();
    for (const auto& set : mine_frequent_attribute_sets(vectors, s.recommender.min_support)) {
      json columns = json::array();
      for (const auto& c : set.columns) columns.push_back(c.qualified());
      itemsets.push_back({{"columns", columns},
                          {"support", set.support},
                          {"relative_support", occurrences ? double(set.support) / double(occurrences) : 0.0}});
    }
    domains.push_back({{"domain_label", group.domain_label},
                       {"database_id", group.schema->database_id()},
                       {"reference_queries", group.queries.size()},
                       {"occurrences", occurrences},
                       {"itemsets", itemsets}});
  }
  json report = {{"format", "qrec-itemset-report"},
                 {"version", 1},
                 {"min_support", s.recommender.min_support},
                 {"binarization_threshold", threshold},
                 {"domains", domains}};
  if (o.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    std::ofstream file(o.out);
    file << report.dump(2) << '\n';
    if (!file) throw Error(ErrorCode::StorageError, "cannot write " + o.out);
  }
  return 0;
}

int cmd_repl(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  auto catalog = load_catalog(o);
  if (fs::path(o.db).extension() == ".json") throw UsageError("repl needs an SQLite --db to execute queries");
  Settings s = load_settings(o);
  auto repo = load_repository(o, s);
  TextSimilarity sim(make_embedder(s.embedder));
  RecommenderContext ctx{catalog, &repo, &sim};
  SqliteBackend backend(o.db);

  std::vector<HistoryEntry> history;
  std::vector<QueryIR> queries;
  auto recs = recommend_initial(ctx, s.recommender);

  out << "qrec repl on " << catalog->database_id() << " (" << catalog->domain_label() << ")\n"
      << "type SQL, :pick <n>, :history or :quit\n\n";
  print_recommendations(out, recs);

  std::string line;
  while (out << "\n> " << std::flush, std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line == ":quit" || line == ":q") break;
    if (line == ":history") {
      if (history.empty()) out << "(no queries yet)\n";
      for (const auto& e : history) out << '#' << e.index << ' ' << e.nl_text << "\n   " << e.sql << '\n';
      continue;
    }
    try {
      QueryIR query;
      if (line.rfind(":pick", 0) == 0) {
        std::string arg = trim(line.substr(5));
        std::size_t n = 0;
        try {
          std::size_t used = 0;
          n = std::stoul(arg, &used);
          if (used != arg.size()) throw std::invalid_argument(arg);
        } catch (const std::exception&) {
          err << "usage: :pick <n>\n";
          continue;
        }
        if (n >= recs.items.size()) {
          throw Error(ErrorCode::StaleRecommendationIndex, "no recommendation " + std::to_string(n));
        }
        query = recs.items[n].query;
      } else if (line[0] == ':') {
        err << "unknown command " << line << '\n';
        continue;
      } else {
        query = parse_sql(line, catalog);
        if (query.lossy) throw Error(ErrorCode::SyntaxError, "filters, ordering and set operations are not supported");
      }
      auto entry = make_entry(history.size(), query, execute(query, backend));
      out << '#' << entry.index << ' ' << entry.nl_text << "\n   " << entry.sql << "\n   chart: "
          << to_string(entry.chart.mark) << "\n   " << entry.explanation.text() << "\n\n";
      print_table(out, entry.result);
      history.push_back(std::move(entry));
      queries.push_back(std::move(query));
      recs = recommend_next(queries, ctx, s.recommender);
      out << '\n';
      if (recs.exhausted) out << "(every column explored; showing the full pool)\n";
      print_recommendations(out, recs);
    } catch (const Error& e) {
      err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    }
  }
  out << '\n';
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  auto path = config_path(o);
  if (!path) throw UsageError("serve needs --config or QREC_CONFIG");
  ServiceConfig config = ServiceConfig::load(*path);
  if (o.port) config.port = *o.port;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionService service(config);
  HttpServer server(service);
  int port = server.bind(config.host, config.port);
  out << "qrec serving on http://" << config.host << ':' << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query recommendation for exploratory analysis of relational databases", "qrec"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON config file (falls back to $QREC_CONFIG)");
    cmd->add_option("--log", o.log, "Reference repository snapshot, or Spider query records with --schemas");
    cmd->add_option("--schemas", o.schemas, "Spider tables.json for the reference queries");
  };
  auto* recommend = app.add_subcommand("recommend", "Print first-step recommendations for a database");
  recommend->add_option("--db", o.db, "SQLite database or Spider tables.json")->required();
  recommend->add_option("--domain", o.domain, "Analysis domain label (default: from the database name)");
  recommend->add_option("--top-k", o.top_k, "Number of recommendations")->check(CLI::PositiveNumber);
  add_common(recommend);

  auto* mine = app.add_subcommand("mine", "Write per-domain maximal frequent attribute sets as JSON");
  mine->add_option("--out", o.out, "Report path (default: stdout)");
  add_common(mine);

  auto* repl = app.add_subcommand("repl", "Interactive exploration loop");
  repl->add_option("--db", o.db, "SQLite database")->required();
  repl->add_option("--domain", o.domain, "Analysis domain label");
  repl->add_option("--top-k", o.top_k, "Number of recommendations")->check(CLI::PositiveNumber);
  add_common(repl);

  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--config", o.config, "Service config file (falls back to $QREC_CONFIG)");
  serve->add_option("--port", o.port, "Override the configured port")->check(CLI::Range(0, 65535));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "qrec: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*recommend) return cmd_recommend(o, out, err);
    if (*mine) return cmd_mine(o, out);
    if (*repl) return cmd_repl(o, in, out, err);
    return cmd_serve(o, out);
  } catch (const UsageError& e) {
    err << "qrec: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const Error& e) {
    err << "qrec: error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "qrec: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qrec
