#include "visitscope/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <sstream>

#include "visitscope/csv.hpp"
#include "visitscope/parallel.hpp"
#include "visitscope/rng.hpp"
#include "visitscope/simd/kernels.hpp"

namespace visitscope::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Quality: return "quality";
    case Stage::Visits: return "visits";
    case Stage::Fit: return "fit";
    case Stage::Classify: return "classify";
    case Stage::Patterns: return "patterns";
    case Stage::Report: return "report";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : kStages)
    if (s == to_string(st)) return st;
  return std::nullopt;
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
  }
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_.get(), p, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

namespace {

constexpr const char* kStageFile = ".stage.json";

using FileHashes = std::map<std::string, std::string>;  // relative path -> sha256

FileHashes hash_tree(const fs::path& dir) {
  FileHashes out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel == kStageFile) continue;
    out[rel] = sha256_file(e.path());
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

template <class F>
void write_with(const fs::path& path, F&& f) {
  std::ostringstream os;
  f(os);
  write_file(path, os.str());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  return json::parse(in);
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing " + path.string());
  return in;
}

struct Context {
  const PipelineConfig& cfg;
  fs::path out;
  const RunOptions& opt;
  std::map<Stage, FileHashes> outputs;  // of stages verified or run in this invocation

  fs::path dir(Stage s) const { return out / to_string(s); }
  void log(Stage s, const std::string& msg) const {
    if (opt.log) opt.log(std::string("[") + to_string(s) + "] " + msg);
  }
};

// ---- stage bodies -------------------------------------------------------

void stage_ingest(Context& ctx, const fs::path& dir) {
  const auto& in = ctx.cfg.ingest;
  std::vector<MobilityRecord> records;
  ingest::DatasetManifest manifest;
  for (const auto& root : in.trajectories) {
    if (in.format == "plt") {
      std::map<UserId, ingest::ParseStats> per_user;
      for (const auto& src : ingest::discover_plt(root)) {
        auto r = ingest::parse_plt_file(src.path, src.user_id);
        per_user[src.user_id] += r.stats;
        records.insert(records.end(), std::make_move_iterator(r.rows.begin()), std::make_move_iterator(r.rows.end()));
      }
      for (const auto& [user, st] : per_user)
        manifest.sources.push_back({root.filename().string() + "/" + user, "plt", st});
    } else {
      auto f = open_in(root);
      auto r = ingest::parse_trajectory_csv(f, in.columns);
      manifest.sources.push_back({root.filename().string(), "csv", r.stats});
      records.insert(records.end(), std::make_move_iterator(r.rows.begin()), std::make_move_iterator(r.rows.end()));
    }
  }
  if (records.empty()) throw std::runtime_error("no valid trajectory records in the configured inputs");
  auto pf = open_in(in.pois);
  auto pois = ingest::parse_poi_file(pf, in.poi_columns);
  manifest.sources.push_back({in.pois.filename().string(), "poi", pois.stats});
  if (pois.rows.empty()) throw std::runtime_error("no valid PoI records in " + in.pois.string());
  const auto traces = ingest::build_traces(records, &manifest.build);
  manifest = ingest::write_store(dir, traces, pois.rows, std::move(manifest));
  ctx.log(Stage::Ingest, std::to_string(records.size()) + " records, " + std::to_string(traces.size()) + " users, " +
                             std::to_string(pois.rows.size()) + " PoIs");
}

void stage_quality(Context& ctx, const fs::path& dir) {
  const auto& q = ctx.cfg.quality;
  const auto store = ingest::read_store(ctx.dir(Stage::Ingest));
  const auto params = q.params();
  const auto grid = quality::grid_assessment(store.traces, q.tau_grid, q.T_grid, params, q.anchor, ctx.cfg.threads);
  write_with(dir / "reports.csv", [&](std::ostream& os) { quality::write_reports_csv(os, grid); });
  auto hist = quality::histograms_json(grid);
  hist["aggregation"] = "mean of per-day scores";
  write_file(dir / "histograms.json", hist.dump(2) + "\n");

  std::vector<const MobilityTrace*> traces;
  for (const auto& [_, t] : store.traces) traces.push_back(&t);
  std::vector<quality::UserScore> scores(traces.size());
  parallel_for(traces.size(), ctx.cfg.threads,
               [&](std::size_t i) { scores[i] = quality::score_user(*traces[i], params, q.anchor); });
  const auto cohort = quality::select_cohort(scores, q.cohort);
  const std::set<UserId> selected(cohort.begin(), cohort.end());

  json users = json::array();
  write_with(dir / "scores.csv", [&](std::ostream& os) {
    os << "user_id,mu_T,mu_S,window_start,window_end,selected\n";
    for (const auto& s : scores) {
      const Timestamp end = s.window_start + params.span_s();
      const bool in = selected.count(s.user_id) > 0;
      os << csv::escape(s.user_id) << ',' << csv::exact(s.mu_T) << ',' << csv::exact(s.mu_S) << ','
         << format_iso8601(s.window_start) << ',' << format_iso8601(end) << ',' << (in ? "true" : "false") << '\n';
      if (in) users.push_back({{"user_id", s.user_id}, {"window_start", s.window_start}, {"window_end", end}});
    }
  });
  const json c = {{"tau_h", q.tau_h},
                  {"T_d", q.T_d},
                  {"P_h", q.P_h},
                  {"max_speed_kmh", q.max_speed_kmh},
                  {"mu_T_min", q.cohort.mu_T_min},
                  {"mu_S_min", q.cohort.mu_S_min},
                  {"aggregation", "mean of per-day scores"},
                  {"window", "left-open ]start, start + T*P]"},
                  {"weeks", static_cast<double>(params.span_s()) / (7.0 * kSecondsPerDay)},
                  {"users_scored", scores.size()},
                  {"cohort_size", cohort.size()},
                  {"users", users}};
  write_file(dir / "cohort.json", c.dump(2) + "\n");
  ctx.log(Stage::Quality, "cohort " + std::to_string(cohort.size()) + " of " + std::to_string(scores.size()) + " users");
}

void stage_visits(Context& ctx, const fs::path& dir) {
  const auto& vc = ctx.cfg.visits;
  const auto store = ingest::read_store(ctx.dir(Stage::Ingest));
  const auto cohort = read_json(ctx.dir(Stage::Quality) / "cohort.json");
  struct Job {
    const MobilityTrace* trace;
    Timestamp begin, end;
  };
  std::vector<Job> jobs;
  for (const auto& u : cohort.at("users")) {
    const auto it = store.traces.find(u.at("user_id").get<std::string>());
    if (it == store.traces.end()) throw std::runtime_error("cohort user missing from ingest store");
    jobs.push_back({&it->second, u.at("window_start").get<Timestamp>(), u.at("window_end").get<Timestamp>()});
  }
  std::vector<std::vector<Visit>> per_user(jobs.size());
  parallel_for(jobs.size(), ctx.cfg.threads, [&](std::size_t i) {
    per_user[i] = visits::extract_stay_points(quality::slice_window(*jobs[i].trace, jobs[i].begin, jobs[i].end), vc.stay);
  });
  std::vector<Visit> all;
  for (auto& v : per_user) all.insert(all.end(), v.begin(), v.end());
  const geo::SpatialIndex index(store.pois, vc.snap_radius_m);
  visits::snap_all(all, index, vc.snap_radius_m);
  visits::AggregateStats stats;
  const auto features = visits::aggregate_features(all, &stats);
  write_with(dir / "visits.csv", [&](std::ostream& os) { visits::write_visits_csv(os, all); });
  write_with(dir / "features.csv", [&](std::ostream& os) { visits::write_features_csv(os, features); });
  const json summary = {
      {"users", jobs.size()},
      {"visits", all.size()},
      {"snapped", stats.snapped},
      {"unsnapped", stats.unsnapped},
      {"features", features.size()},
      {"dist_thresh_m", vc.stay.dist_thresh_m},
      {"time_thresh_s", vc.stay.time_thresh_s},
      {"snap_radius_m", vc.snap_radius_m},
      {"dwell_method", "stay points (anchor scan within dist_thresh, span >= time_thresh) snapped to the nearest PoI "
                       "within snap_radius; dwell = last minus first record of the stay"}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  ctx.log(Stage::Visits, std::to_string(all.size()) + " visits, " + std::to_string(stats.snapped) + " snapped, " +
                             std::to_string(features.size()) + " (user, PoI) features");
}

void stage_fit(Context& ctx, const fs::path& dir) {
  const auto& mc = ctx.cfg.model;
  auto fin = open_in(ctx.dir(Stage::Visits) / "features.csv");
  const auto features = visits::read_features_csv(fin);
  if (features.empty()) throw std::runtime_error("no feature rows; the cohort may be empty (check quality thresholds)");
  const auto fm = visits::feature_matrix(features, mc.transform);

  gmm::SweepParams sp;
  sp.k_max = mc.k_max;
  sp.kinds = mc.kinds;
  sp.base.k = mc.k;
  sp.base.kind = mc.cov_kind;
  sp.base.seed = ctx.cfg.seed;
  sp.base.max_iter = mc.max_iter;
  sp.base.tol = mc.tol;
  sp.base.reg_covar = mc.reg_covar;
  sp.base.n_init = mc.n_init;
  sp.selected_k = mc.k;
  sp.selected_kind = mc.cov_kind;
  sp.threads = ctx.cfg.threads;
  const auto sw = gmm::sweep(fm.values, sp);
  write_with(dir / "sweep.csv", [&](std::ostream& os) { gmm::write_sweep_csv(os, sw); });

  gmm::GmmParams gp = sp.base;
  gp.seed = gmm::cell_seed(ctx.cfg.seed, mc.k, mc.cov_kind);
  const auto model = gmm::fit_gmm(fm.values, gp);
  const auto ic = gmm::information_criteria(model.loglik, fm.values.rows(), model.k, model.d, model.kind);
  auto mj = gmm::to_json(model);
  mj["transform"] = visits::to_string(mc.transform);
  mj["features"] = {"n_days", "mean_dwell_h"};
  mj["n_rows"] = fm.values.rows();
  write_file(dir / "model.json", mj.dump(2) + "\n");

  json cells = json::array();
  for (const auto& c : sw.cells) {
    json row = {{"k", c.k}, {"cov_kind", gmm::to_string(c.kind)}, {"ok", c.ok}};
    if (c.ok) {
      row["loglik"] = c.loglik;
      row["bic"] = c.bic;
      row["aic"] = c.aic;
      row["converged"] = c.converged;
      row["iterations"] = c.iterations;
    } else {
      row["error"] = c.error;
    }
    cells.push_back(row);
  }
  json elbows = json::object();
  for (const auto& [kind, e] : sw.bic_elbow)
    elbows[gmm::to_string(kind)] = {{"k", e.k ? json(*e.k) : json(nullptr)}, {"curvature", e.curvature}};
  const json summary = {{"n_rows", fm.values.rows()},
                        {"transform", visits::to_string(mc.transform)},
                        {"selected",
                         {{"k", model.k},
                          {"cov_kind", gmm::to_string(model.kind)},
                          {"loglik", model.loglik},
                          {"bic", ic.bic},
                          {"aic", ic.aic},
                          {"params", ic.params},
                          {"converged", model.converged},
                          {"iterations", model.iterations}}},
                        {"bic_elbow", elbows},
                        {"cells", cells}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::string elbow_msg = "none";
  if (const auto it = sw.bic_elbow.find(gmm::CovKind::Tied); it != sw.bic_elbow.end() && it->second.k)
    elbow_msg = std::to_string(*it->second.k);
  ctx.log(Stage::Fit, std::to_string(sw.cells.size()) + " sweep cells on " + std::to_string(fm.values.rows()) +
                          " rows; tied BIC elbow " + elbow_msg);
}

void stage_classify(Context& ctx, const fs::path& dir) {
  auto fin = open_in(ctx.dir(Stage::Visits) / "features.csv");
  const auto features = visits::read_features_csv(fin);
  const auto mj = read_json(ctx.dir(Stage::Fit) / "model.json");
  const auto model = gmm::model_from_json(mj);
  const auto transform = visits::transform_from_string(mj.at("transform").get<std::string>());
  const auto& rules = ctx.cfg.classify;
  const auto labeling = classify::assign_labels(model, transform, features, rules);
  const auto labeled = classify::classify_features(features, model, transform, labeling, rules);
  write_with(dir / "labeled_features.csv", [&](std::ostream& os) { classify::write_labeled_csv(os, labeled); });
  write_file(dir / "labeling.json", classify::to_json(labeling, rules).dump(2) + "\n");
  const auto counts = classify::label_counts(labeled);
  json cj = json::object();
  for (std::size_t l = 0; l < classify::kLabelCount; ++l) cj[classify::code(classify::label_at(l))] = counts[l];
  const auto overridden = std::count_if(labeled.begin(), labeled.end(), [](const auto& f) { return f.overridden; });
  const json summary = {{"features", labeled.size()}, {"label_counts", cj}, {"overridden", overridden}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  ctx.log(Stage::Classify, std::to_string(labeled.size()) + " features labeled, " + std::to_string(overridden) +
                               " by the dwell override");
}

void stage_patterns(Context& ctx, const fs::path& dir) {
  const auto& pc = ctx.cfg.patterns;
  auto vin = open_in(ctx.dir(Stage::Visits) / "visits.csv");
  const auto all = visits::read_visits_csv(vin);
  auto lin = open_in(ctx.dir(Stage::Classify) / "labeled_features.csv");
  const auto labeled = classify::read_labeled_csv(lin);
  const auto lv = patterns::label_visits(all, labeled);

  write_with(dir / "labeled_visits.csv", [&](std::ostream& os) {
    os << "user_id,poi_id,arrival,departure,label\n";
    for (const auto& v : lv)
      os << csv::escape(v.visit.user_id) << ',' << csv::escape(*v.visit.poi_id) << ','
         << format_iso8601(v.visit.arrival) << ',' << format_iso8601(v.visit.departure) << ','
         << classify::code(v.label) << '\n';
  });

  const auto matrices = patterns::transition_matrices(lv);
  write_with(dir / "transitions.csv", [&](std::ostream& os) { patterns::write_transitions_csv(os, matrices); });
  const auto motifs = patterns::cluster_motifs(matrices, pc.k_m, derive_seed(ctx.cfg.seed, 0x6d6f74));
  write_file(dir / "motifs.json", patterns::motifs_json(motifs).dump(2) + "\n");

  auto pin = open_in(ctx.dir(Stage::Ingest) / "pois.csv");
  std::unordered_map<PoiId, std::string> category_of;
  for (const auto& p : ingest::parse_poi_file(pin, {}).rows) category_of[p.poi_id] = p.category;
  const auto semantic = patterns::semantic_top_k(lv, category_of, pc.top_k);
  write_with(dir / "semantic.csv", [&](std::ostream& os) { patterns::write_semantic_csv(os, semantic); });

  const double weeks = read_json(ctx.dir(Stage::Quality) / "cohort.json").at("weeks").get<double>();
  const auto temporal = patterns::temporal_profile(lv, weeks);
  write_with(dir / "temporal.csv", [&](std::ostream& os) { patterns::write_temporal_csv(os, temporal); });
  json users = json::object();
  for (std::size_t l = 0; l < classify::kLabelCount; ++l)
    users[classify::code(classify::label_at(l))] = temporal.users[l];
  write_file(dir / "temporal.json",
             json{{"mode", temporal.mode}, {"weeks", temporal.weeks}, {"users_per_label", users}}.dump(2) + "\n");

  const auto grid = patterns::spatial_grid(lv, pc.cell_deg, pc.aoi);
  write_with(dir / "spatial_grid.csv", [&](std::ostream& os) { patterns::write_spatial_csv(os, grid); });
  write_file(dir / "spatial_grid.json", patterns::spatial_meta_json(grid).dump(2) + "\n");
  ctx.log(Stage::Patterns, std::to_string(lv.size()) + " labeled visits, " + std::to_string(motifs.users.size()) +
                               " users clustered into " + std::to_string(pc.k_m) + " motifs");
}

std::string fmt(double v, int decimals) { return csv::fixed(v, decimals); }

void stage_report(Context& ctx, const fs::path& dir) {
  const auto cohort = read_json(ctx.dir(Stage::Quality) / "cohort.json");
  const auto vis = read_json(ctx.dir(Stage::Visits) / "summary.json");
  const auto fit = read_json(ctx.dir(Stage::Fit) / "summary.json");
  const auto cls = read_json(ctx.dir(Stage::Classify) / "summary.json");
  const auto motifs = read_json(ctx.dir(Stage::Patterns) / "motifs.json");

  json motif_sizes = json::array();
  for (const auto& c : motifs.at("centroids")) motif_sizes.push_back(c.at("members"));
  const json report = {
      {"version", kVersion},
      {"cohort",
       {{"users_scored", cohort.at("users_scored")},
        {"cohort_size", cohort.at("cohort_size")},
        {"tau_h", cohort.at("tau_h")},
        {"T_d", cohort.at("T_d")},
        {"mu_T_min", cohort.at("mu_T_min")},
        {"mu_S_min", cohort.at("mu_S_min")}}},
      {"visits", vis},
      {"sweep", fit.at("cells")},
      {"bic_elbow", fit.at("bic_elbow")},
      {"selected_model", fit.at("selected")},
      {"transform", fit.at("transform")},
      {"label_counts", cls.at("label_counts")},
      {"overridden", cls.at("overridden")},
      {"motifs", {{"k_m", motif_sizes.size()}, {"sizes", motif_sizes}, {"inertia", motifs.at("inertia")}}}};
  write_file(dir / "report.json", report.dump(2) + "\n");

  std::ostringstream t;
  t << "visitscope report\n=================\n\n";
  t << "Cohort: " << cohort.at("cohort_size").get<std::size_t>() << " of " << cohort.at("users_scored").get<std::size_t>()
    << " users (tau = " << cohort.at("tau_h").get<double>() << " h, T = " << cohort.at("T_d").get<int>()
    << " d, mu_T >= " << cohort.at("mu_T_min").get<double>() << ", mu_S >= " << cohort.at("mu_S_min").get<double>()
    << ")\n";
  t << "Visits: " << vis.at("visits").get<std::size_t>() << " (" << vis.at("snapped").get<std::size_t>()
    << " snapped), features: " << vis.at("features").get<std::size_t>() << "\n\n";

  const auto& sel = fit.at("selected");
  t << "Selected model: k = " << sel.at("k").get<std::size_t>() << ", " << sel.at("cov_kind").get<std::string>()
    << " covariance, transform " << fit.at("transform").get<std::string>() << "\n";
  t << "  loglik " << fmt(sel.at("loglik").get<double>(), 3) << ", BIC " << fmt(sel.at("bic").get<double>(), 3)
    << ", AIC " << fmt(sel.at("aic").get<double>(), 3) << ", converged "
    << (sel.at("converged").get<bool>() ? "yes" : "no") << "\n\n";

  // BIC table: one row per k, one column per covariance kind.
  std::vector<std::string> kinds;
  std::map<std::size_t, std::map<std::string, std::string>> table;
  for (const auto& c : fit.at("cells")) {
    const auto kind = c.at("cov_kind").get<std::string>();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
    table[c.at("k").get<std::size_t>()][kind] = c.at("ok").get<bool>() ? fmt(c.at("bic").get<double>(), 2) : "failed";
  }
  t << "BIC sweep\n" << std::setw(4) << "k";
  for (const auto& k : kinds) t << std::setw(16) << k;
  t << "\n";
  for (const auto& [k, row] : table) {
    t << std::setw(4) << k;
    for (const auto& kind : kinds) t << std::setw(16) << (row.count(kind) ? row.at(kind) : "");
    t << "\n";
  }
  t << "Elbow (BIC):";
  for (const auto& [kind, e] : fit.at("bic_elbow").items())
    t << " " << kind << "=" << (e.at("k").is_null() ? std::string("none") : std::to_string(e.at("k").get<std::size_t>()));
  t << "\n\nLabel counts\n";
  for (const auto& [label, n] : cls.at("label_counts").items()) {
    const auto l = classify::label_from_code(label);
    t << "  " << label << "  " << std::left << std::setw(22) << (l ? classify::display_name(*l) : "") << std::right
      << std::setw(8) << n.get<std::size_t>() << "\n";
  }
  t << "  dwell override applied to " << cls.at("overridden").get<std::size_t>() << " features\n\n";
  t << "Motifs: " << motif_sizes.size() << " clusters, sizes";
  for (const auto& s : motif_sizes) t << " " << s.get<std::size_t>();
  t << ", inertia " << fmt(motifs.at("inertia").get<double>(), 6) << "\n";
  write_file(dir / "report.txt", t.str());
}

// ---- caching -------------------------------------------------------------

std::vector<Stage> dependencies(Stage s) {
  switch (s) {
    case Stage::Ingest: return {};
    case Stage::Quality: return {Stage::Ingest};
    case Stage::Visits: return {Stage::Ingest, Stage::Quality};
    case Stage::Fit: return {Stage::Visits};
    case Stage::Classify: return {Stage::Visits, Stage::Fit};
    case Stage::Patterns: return {Stage::Ingest, Stage::Quality, Stage::Visits, Stage::Classify};
    case Stage::Report: return {Stage::Quality, Stage::Visits, Stage::Fit, Stage::Classify, Stage::Patterns};
  }
  return {};
}

json config_subtree(const PipelineConfig& cfg, Stage s) {
  const json full = cfg.to_json();
  switch (s) {
    case Stage::Ingest: {
      json j = full.at("ingest");
      j.erase("trajectories");  // inputs are keyed by content instead
      j.erase("pois");
      return j;
    }
    case Stage::Quality: return full.at("quality");
    case Stage::Visits: return full.at("visits");
    // results of the numeric kernels differ in the last bits between backends
    case Stage::Fit:
      return {{"model", full.at("model")}, {"seed", cfg.seed}, {"simd", simd::to_string(simd::kernels().backend)}};
    case Stage::Classify: return full.at("classify");
    case Stage::Patterns:
      return {{"patterns", full.at("patterns")}, {"seed", cfg.seed}, {"simd", simd::to_string(simd::kernels().backend)}};
    case Stage::Report: return json::object();
  }
  return {};
}

json raw_inputs(const PipelineConfig& cfg) {
  json in = json::object();
  for (std::size_t i = 0; i < cfg.ingest.trajectories.size(); ++i) {
    const auto& root = cfg.ingest.trajectories[i];
    const std::string prefix = std::to_string(i) + ":";
    if (cfg.ingest.format == "plt") {
      for (const auto& src : ingest::discover_plt(root))
        in[prefix + fs::relative(src.path, root).generic_string()] = sha256_file(src.path);
    } else {
      in[prefix + root.filename().string()] = sha256_file(root);
    }
  }
  in["pois"] = sha256_file(cfg.ingest.pois);
  return in;
}

std::string stage_key(const Context& ctx, Stage s) {
  json inputs = json::object();
  if (s == Stage::Ingest) {
    inputs = raw_inputs(ctx.cfg);
  } else {
    for (Stage d : dependencies(s)) inputs[to_string(d)] = ctx.outputs.at(d);
  }
  const json k = {{"stage", to_string(s)}, {"version", kVersion}, {"config", config_subtree(ctx.cfg, s)}, {"inputs", inputs}};
  return sha256_hex(k.dump());
}

// Returns recorded outputs when the stage directory is a valid cache entry.
std::optional<FileHashes> cached_outputs(const fs::path& dir, const std::string& key) {
  const auto meta = dir / kStageFile;
  if (!fs::exists(meta)) return std::nullopt;
  try {
    const json j = read_json(meta);
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    const auto recorded = j.at("outputs").get<FileHashes>();
    if (hash_tree(dir) != recorded) return std::nullopt;
    return recorded;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void run_body(Context& ctx, Stage s, const fs::path& dir) {
  switch (s) {
    case Stage::Ingest: return stage_ingest(ctx, dir);
    case Stage::Quality: return stage_quality(ctx, dir);
    case Stage::Visits: return stage_visits(ctx, dir);
    case Stage::Fit: return stage_fit(ctx, dir);
    case Stage::Classify: return stage_classify(ctx, dir);
    case Stage::Patterns: return stage_patterns(ctx, dir);
    case Stage::Report: return stage_report(ctx, dir);
  }
}

void update_manifest(const Context& ctx, const StageOutcome& o) {
  const auto path = ctx.out / "run_manifest.json";
  json m = json::object();
  if (fs::exists(path)) {
    try {
      m = read_json(path);
    } catch (const std::exception&) {
      m = json::object();
    }
  }
  m["tool"] = "visitscope";
  m["version"] = kVersion;
  m["simd_backend"] = simd::to_string(simd::kernels().backend);
  m["config"] = ctx.cfg.to_json();
  m["stages"][to_string(o.stage)] = {{"key", o.key},
                                     {"cached", o.cached},
                                     {"seconds", o.seconds},
                                     {"outputs", ctx.outputs.at(o.stage)}};
  write_file(path, m.dump(2) + "\n");
}

void progress(const RunOptions& opt, const json& j) {
  if (opt.progress_json && opt.progress) opt.progress(j.dump());
}

}  // namespace

std::vector<StageOutcome> run(const PipelineConfig& config, Stage target, const RunOptions& options) {
  Context ctx{config, config.output_dir, options, {}};
  fs::create_directories(ctx.out);
  std::vector<StageOutcome> outcomes;
  for (Stage s : kStages) {
    StageOutcome o;
    o.stage = s;
    const auto t0 = std::chrono::steady_clock::now();
    progress(options, {{"event", "stage_start"}, {"stage", to_string(s)}});
    try {
      o.key = stage_key(ctx, s);
      const auto dir = ctx.dir(s);
      if (auto hit = cached_outputs(dir, o.key)) {
        o.cached = true;
        ctx.outputs[s] = std::move(*hit);
        ctx.log(s, "cache hit, nothing to do");
      } else {
        fs::remove_all(dir);
        fs::create_directories(dir);
        run_body(ctx, s, dir);
        ctx.outputs[s] = hash_tree(dir);
        const json meta = {{"stage", to_string(s)}, {"key", o.key}, {"outputs", ctx.outputs[s]}};
        write_file(dir / kStageFile, meta.dump(2) + "\n");
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      progress(options, {{"event", "stage_error"}, {"stage", to_string(s)}, {"message", e.what()}});
      throw StageError(s, e.what());
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    update_manifest(ctx, o);
    progress(options, {{"event", "stage_done"}, {"stage", to_string(s)}, {"cached", o.cached}, {"seconds", o.seconds}});
    outcomes.push_back(o);
    if (s == target) break;
  }
  return outcomes;
}

}  // namespace visitscope::pipeline
