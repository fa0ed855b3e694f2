#include "visitscope/config.hpp"

#include <fstream>
#include <set>

namespace visitscope {
namespace {

using nlohmann::json;

// Walks one JSON object, tracking which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long min) {
    if (const auto* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      if (v->is_number_unsigned()) {
        const auto x = v->get<unsigned long long>();
        if (min > 0 && x < static_cast<unsigned long long>(min))
          throw ConfigError(at(key), "must be >= " + std::to_string(min));
        out = static_cast<Int>(x);
      } else {
        const auto x = v->get<long long>();
        if (x < min) throw ConfigError(at(key), "must be >= " + std::to_string(min));
        out = static_cast<Int>(x);
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

char single_char(const std::string& s, const std::string& field) {
  if (s == "\\t" || s == "tab") return '\t';
  require(s.size() == 1, field, "delimiter must be a single character");
  return s[0];
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string time_format_name(ingest::TimeFormat f) {
  switch (f) {
    case ingest::TimeFormat::Iso8601: return "iso8601";
    case ingest::TimeFormat::EpochSeconds: return "epoch_s";
    case ingest::TimeFormat::EpochMillis: return "epoch_ms";
    case ingest::TimeFormat::Pattern: return "pattern";
  }
  return "iso8601";
}

void parse_ingest(const json& j, const std::filesystem::path& base, IngestConfig& c) {
  Section s(j, "/ingest");
  s.string("format", c.format);
  require(c.format == "csv" || c.format == "plt", s.at("format"), "must be \"csv\" or \"plt\"");

  const json* traj = s.get("trajectories");
  require(traj != nullptr, s.at("trajectories"), "required");
  std::vector<std::pair<std::string, std::string>> paths;  // (field, value)
  if (traj->is_string()) {
    paths.emplace_back(s.at("trajectories"), traj->get<std::string>());
  } else if (traj->is_array() && !traj->empty()) {
    for (std::size_t i = 0; i < traj->size(); ++i) {
      const auto field = s.at("trajectories") + "/" + std::to_string(i);
      require((*traj)[i].is_string(), field, "expected a path string");
      paths.emplace_back(field, (*traj)[i].get<std::string>());
    }
  } else {
    throw ConfigError(s.at("trajectories"), "expected a path or a non-empty array of paths");
  }
  c.trajectories.clear();
  for (const auto& [field, value] : paths) {
    const auto p = resolve(value, base);
    require(std::filesystem::exists(p), field, "path does not exist: " + p.string());
    if (c.format == "plt") require(std::filesystem::is_directory(p), field, "PLT input must be a directory");
    else require(std::filesystem::is_regular_file(p), field, "CSV input must be a file");
    c.trajectories.push_back(p);
  }

  if (const json* cols = s.get("columns")) {
    Section cs(*cols, s.at("columns"));
    cs.string("user", c.columns.user);
    cs.string("lat", c.columns.lat);
    cs.string("lon", c.columns.lon);
    cs.string("timestamp", c.columns.timestamp);
    cs.finish();
  }
  std::string tf = time_format_name(c.columns.time_format);
  s.string("time_format", tf);
  if (tf == "iso8601") c.columns.time_format = ingest::TimeFormat::Iso8601;
  else if (tf == "epoch_s") c.columns.time_format = ingest::TimeFormat::EpochSeconds;
  else if (tf == "epoch_ms") c.columns.time_format = ingest::TimeFormat::EpochMillis;
  else if (tf == "pattern") c.columns.time_format = ingest::TimeFormat::Pattern;
  else throw ConfigError(s.at("time_format"), "must be one of iso8601, epoch_s, epoch_ms, pattern");
  s.string("time_pattern", c.columns.time_pattern);
  require(c.columns.time_format != ingest::TimeFormat::Pattern || !c.columns.time_pattern.empty(),
          s.at("time_pattern"), "required when time_format is \"pattern\"");
  std::string delim(1, c.columns.delimiter);
  s.string("delimiter", delim);
  c.columns.delimiter = single_char(delim, s.at("delimiter"));

  std::string pois;
  s.string("pois", pois);
  require(!pois.empty(), s.at("pois"), "required");
  c.pois = resolve(pois, base);
  require(std::filesystem::is_regular_file(c.pois), s.at("pois"), "path does not exist: " + c.pois.string());
  if (const json* cols = s.get("poi_columns")) {
    Section cs(*cols, s.at("poi_columns"));
    cs.string("id", c.poi_columns.id);
    cs.string("lat", c.poi_columns.lat);
    cs.string("lon", c.poi_columns.lon);
    cs.string("category", c.poi_columns.category);
    cs.finish();
  }
  std::string pdelim(1, c.poi_columns.delimiter);
  s.string("poi_delimiter", pdelim);
  c.poi_columns.delimiter = single_char(pdelim, s.at("poi_delimiter"));
  s.finish();
}

void parse_quality(const json& j, QualityConfig& c) {
  Section s(j, "/quality");
  s.number("tau_h", c.tau_h);
  require(c.tau_h > 0, s.at("tau_h"), "must be > 0");
  s.integer("T_d", c.T_d, 1);
  s.number("P_h", c.P_h);
  require(c.P_h > 0, s.at("P_h"), "must be > 0");
  require(c.tau_h <= c.P_h, s.at("tau_h"), "must not exceed P_h");
  s.number("max_speed_kmh", c.max_speed_kmh);
  require(c.max_speed_kmh > 0, s.at("max_speed_kmh"), "must be > 0");
  s.number("mu_T_min", c.cohort.mu_T_min);
  require(c.cohort.mu_T_min >= 0 && c.cohort.mu_T_min <= 1, s.at("mu_T_min"), "must lie in [0, 1]");
  s.number("mu_S_min", c.cohort.mu_S_min);
  require(c.cohort.mu_S_min >= 0 && c.cohort.mu_S_min <= 1, s.at("mu_S_min"), "must lie in [0, 1]");
  if (const json* g = s.get("tau_grid")) {
    require(g->is_array() && !g->empty(), s.at("tau_grid"), "expected a non-empty array");
    c.tau_grid.clear();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const auto field = s.at("tau_grid") + "/" + std::to_string(i);
      require((*g)[i].is_number() && (*g)[i].get<double>() > 0 && (*g)[i].get<double>() <= c.P_h, field,
              "expected a number in (0, P_h]");
      c.tau_grid.push_back((*g)[i].get<double>());
    }
  }
  if (const json* g = s.get("T_grid")) {
    require(g->is_array() && !g->empty(), s.at("T_grid"), "expected a non-empty array");
    c.T_grid.clear();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const auto field = s.at("T_grid") + "/" + std::to_string(i);
      require((*g)[i].is_number_integer() && (*g)[i].get<long long>() >= 1, field, "expected an integer >= 1");
      c.T_grid.push_back((*g)[i].get<int>());
    }
  }
  std::string ws = "first_day";
  s.string("window_start", ws);
  if (ws == "first_day") {
    c.anchor = {};
  } else {
    const auto t = parse_iso8601(ws);
    require(t.has_value(), s.at("window_start"), "expected \"first_day\" or an ISO 8601 date/time");
    c.anchor.mode = quality::WindowAnchor::Mode::Fixed;
    c.anchor.fixed_start = *t;
  }
  s.finish();
  try {
    c.params();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/quality", e.what());
  }
}

void parse_visits(const json& j, VisitsConfig& c) {
  Section s(j, "/visits");
  s.number("dist_thresh_m", c.stay.dist_thresh_m);
  require(c.stay.dist_thresh_m > 0, s.at("dist_thresh_m"), "must be > 0");
  s.number("time_thresh_s", c.stay.time_thresh_s);
  require(c.stay.time_thresh_s >= 0, s.at("time_thresh_s"), "must be >= 0");
  s.number("snap_radius_m", c.snap_radius_m);
  require(c.snap_radius_m > 0, s.at("snap_radius_m"), "must be > 0");
  s.finish();
}

gmm::CovKind kind_at(const json& v, const std::string& field) {
  require(v.is_string(), field, "expected a covariance kind string");
  try {
    return gmm::cov_kind_from_string(v.get<std::string>());
  } catch (const std::exception&) {
    throw ConfigError(field, "must be one of spherical, diag, tied, full");
  }
}

void parse_model(const json& j, ModelConfig& c) {
  Section s(j, "/model");
  s.integer("k", c.k, 1);
  if (const json* v = s.get("cov_kind")) c.cov_kind = kind_at(*v, s.at("cov_kind"));
  s.integer("k_max", c.k_max, 1);
  if (const json* v = s.get("kinds")) {
    require(v->is_array() && !v->empty(), s.at("kinds"), "expected a non-empty array");
    c.kinds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto field = s.at("kinds") + "/" + std::to_string(i);
      const auto kind = kind_at((*v)[i], field);
      require(std::find(c.kinds.begin(), c.kinds.end(), kind) == c.kinds.end(), field, "duplicate kind");
      c.kinds.push_back(kind);
    }
  }
  if (const json* v = s.get("transform")) {
    require(v->is_string(), s.at("transform"), "expected \"none\" or \"log1p\"");
    try {
      c.transform = visits::transform_from_string(v->get<std::string>());
    } catch (const std::exception&) {
      throw ConfigError(s.at("transform"), "expected \"none\" or \"log1p\"");
    }
  }
  s.integer("n_init", c.n_init, 1);
  s.integer("max_iter", c.max_iter, 1);
  s.number("tol", c.tol);
  require(c.tol > 0, s.at("tol"), "must be > 0");
  s.number("reg_covar", c.reg_covar);
  require(c.reg_covar > 0, s.at("reg_covar"), "must be > 0");
  s.finish();
}

void parse_classify(const json& j, classify::LabelingRules& r) {
  Section s(j, "/classify");
  s.boolean("dwell_override", r.dwell_override);
  s.number("override_hours", r.override_hours);
  require(r.override_hours > 0, s.at("override_hours"), "must be > 0");
  if (const json* a = s.get("anchors")) {
    Section as(*a, s.at("anchors"));
    for (std::size_t l = 0; l < classify::kLabelCount; ++l) {
      const std::string code = classify::code(classify::label_at(l));
      if (const json* p = as.get(code)) {
        const auto field = as.at(code);
        require(p->is_array() && p->size() == 2 && (*p)[0].is_number() && (*p)[1].is_number(), field,
                "expected [frequency_pct, dwell_pct]");
        const double f = (*p)[0].get<double>(), d = (*p)[1].get<double>();
        require(f >= 0 && f <= 100 && d >= 0 && d <= 100, field, "percentiles must lie in [0, 100]");
        r.anchors[l] = {f, d};
      }
    }
    as.finish();
  }
  s.finish();
}

void parse_patterns(const json& j, PatternsConfig& c) {
  Section s(j, "/patterns");
  s.integer("k_m", c.k_m, 1);
  s.number("cell_deg", c.cell_deg);
  require(c.cell_deg > 0, s.at("cell_deg"), "must be > 0");
  s.integer("top_k", c.top_k, 1);
  if (const json* a = s.get("aoi")) {
    Section as(*a, s.at("aoi"));
    patterns::Aoi aoi;
    for (auto [key, dst] : {std::pair{"lat_min", &aoi.lat_min}, std::pair{"lat_max", &aoi.lat_max},
                            std::pair{"lon_min", &aoi.lon_min}, std::pair{"lon_max", &aoi.lon_max}}) {
      require(as.get(key) != nullptr, as.at(key), "required");
      as.number(key, *dst);
    }
    as.finish();
    require(aoi.lat_min < aoi.lat_max, s.at("aoi"), "lat_min must be below lat_max");
    require(aoi.lon_min < aoi.lon_max, s.at("aoi"), "lon_min must be below lon_max");
    c.aoi = aoi;
  }
  s.finish();
}

}  // namespace

quality::CompletenessParams QualityConfig::params() const {
  return quality::CompletenessParams::from_hours(tau_h, T_d, P_h, max_speed_kmh);
}

void merge_json(nlohmann::json& target, const nlohmann::json& patch) {
  if (!patch.is_object() || !target.is_object()) {
    target = patch;
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && target.contains(key) && target[key].is_object()) merge_json(target[key], value);
    else target[key] = value;
  }
}

PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  Section s(j, "");
  std::string out = c.output_dir.string();
  s.string("output_dir", out);
  require(!out.empty(), "/output_dir", "must not be empty");
  c.output_dir = resolve(out, base_dir);
  s.integer("threads", c.threads, 1);
  s.integer("seed", c.seed, 0);
  s.get("$schema");
  const json* in = s.get("ingest");
  require(in != nullptr, "/ingest", "required");
  parse_ingest(*in, base_dir, c.ingest);
  if (const json* q = s.get("quality")) parse_quality(*q, c.quality);
  if (const json* v = s.get("visits")) parse_visits(*v, c.visits);
  if (const json* m = s.get("model")) parse_model(*m, c.model);
  if (const json* cl = s.get("classify")) parse_classify(*cl, c.classify);
  if (const json* p = s.get("patterns")) parse_patterns(*p, c.patterns);
  s.finish();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!overrides.is_null()) merge_json(j, overrides);
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

nlohmann::json PipelineConfig::to_json() const {
  using nlohmann::json;
  json traj = json::array();
  for (const auto& p : ingest.trajectories) traj.push_back(p.string());
  json kinds = json::array();
  for (auto k : model.kinds) kinds.push_back(gmm::to_string(k));
  json anchors = json::object();
  for (std::size_t l = 0; l < classify::kLabelCount; ++l)
    anchors[classify::code(classify::label_at(l))] = {classify.anchors[l].frequency, classify.anchors[l].dwell};
  json patterns_j = {{"k_m", patterns.k_m}, {"cell_deg", patterns.cell_deg}, {"top_k", patterns.top_k}};
  if (patterns.aoi)
    patterns_j["aoi"] = {{"lat_min", patterns.aoi->lat_min},
                         {"lat_max", patterns.aoi->lat_max},
                         {"lon_min", patterns.aoi->lon_min},
                         {"lon_max", patterns.aoi->lon_max}};
  return {
      {"output_dir", output_dir.string()},
      {"threads", threads},
      {"seed", seed},
      {"ingest",
       {{"format", ingest.format},
        {"trajectories", traj},
        {"columns",
         {{"user", ingest.columns.user},
          {"lat", ingest.columns.lat},
          {"lon", ingest.columns.lon},
          {"timestamp", ingest.columns.timestamp}}},
        {"time_format", time_format_name(ingest.columns.time_format)},
        {"time_pattern", ingest.columns.time_pattern},
        {"delimiter", std::string(1, ingest.columns.delimiter)},
        {"pois", ingest.pois.string()},
        {"poi_columns",
         {{"id", ingest.poi_columns.id},
          {"lat", ingest.poi_columns.lat},
          {"lon", ingest.poi_columns.lon},
          {"category", ingest.poi_columns.category}}},
        {"poi_delimiter", std::string(1, ingest.poi_columns.delimiter)}}},
      {"quality",
       {{"tau_h", quality.tau_h},
        {"T_d", quality.T_d},
        {"P_h", quality.P_h},
        {"max_speed_kmh", quality.max_speed_kmh},
        {"mu_T_min", quality.cohort.mu_T_min},
        {"mu_S_min", quality.cohort.mu_S_min},
        {"tau_grid", quality.tau_grid},
        {"T_grid", quality.T_grid},
        {"window_start", quality.anchor.mode == quality::WindowAnchor::Mode::FirstDay
                             ? std::string("first_day")
                             : format_iso8601(quality.anchor.fixed_start)}}},
      {"visits",
       {{"dist_thresh_m", visits.stay.dist_thresh_m},
        {"time_thresh_s", visits.stay.time_thresh_s},
        {"snap_radius_m", visits.snap_radius_m}}},
      {"model",
       {{"k", model.k},
        {"cov_kind", gmm::to_string(model.cov_kind)},
        {"k_max", model.k_max},
        {"kinds", kinds},
        {"transform", visits::to_string(model.transform)},
        {"n_init", model.n_init},
        {"max_iter", model.max_iter},
        {"tol", model.tol},
        {"reg_covar", model.reg_covar}}},
      {"classify",
       {{"dwell_override", classify.dwell_override},
        {"override_hours", classify.override_hours},
        {"anchors", anchors}}},
      {"patterns", patterns_j},
  };
}

}  // namespace visitscope
