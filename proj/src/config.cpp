#include "dpl/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Finds the line of a key path by scanning for each quoted component in turn.
std::size_t locate_line(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  for (const auto& key : path) {
    const auto at = text.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + key.size() + 2;
  }
  if (found == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
}

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out.empty() ? "<root>" : out;
}

class Section {
 public:
  Section(const json& node, std::vector<std::string> path, const std::string& text)
      : node_(node), path_(std::move(path)), text_(text) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    const std::size_t line = locate_line(text_, path);
    std::string prefix = line > 0 ? "line " + std::to_string(line) + ": " : "";
    throw Error(ErrorCode::ConfigError, prefix + dotted(path) + ": " + message);
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!node_.contains(key)) return fallback;
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key_path(key), "wrong type");
    }
  }

  Vec3 get_vec3(const std::string& key, const Vec3& fallback) {
    used_.insert(key);
    if (!node_.contains(key)) return fallback;
    const auto& a = node_.at(key);
    if (!a.is_array() || a.size() != 3 || !std::all_of(a.begin(), a.end(), [](const json& v) { return v.is_number(); })) {
      fail(key_path(key), "expected an array of 3 numbers");
    }
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  }

  Section child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(node_.contains(key) ? node_.at(key) : empty, key_path(key), text_);
  }

  void check(bool ok, const std::string& key, const std::string& message) const {
    if (!ok) fail(key_path(key), message);
  }

  // Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!used_.count(key)) fail(key_path(key), "unknown key '" + key + "'");
    }
  }

 private:
  std::vector<std::string> key_path(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return p;
  }

  const json& node_;
  std::vector<std::string> path_;
  const std::string& text_;
  std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  RunConfig cfg;
  Section root(doc, {}, text);

  const auto schema = root.get<std::string>("schema", "");
  root.check(schema == "dpl-config/1", "schema", "expected \"dpl-config/1\", got \"" + schema + "\"");
  cfg.seed = root.get<std::uint64_t>("seed", cfg.seed);
  cfg.threads = root.get<std::size_t>("threads", cfg.threads);
  try {
    cfg.pipeline.variant = parse_variant(root.get<std::string>("variant", "VAR_EO"));
  } catch (const Error& e) {
    root.fail({"variant"}, e.message());
  }

  {
    Section s = root.child("sampling");
    auto& sc = cfg.pipeline.sampling;
    sc.t_max = s.get<double>("t_max", sc.t_max);
    sc.r_max = s.get<double>("r_max_deg", sc.r_max / kDeg) * kDeg;
    sc.n_candidates = s.get<std::size_t>("n_candidates", sc.n_candidates);
    sc.include_estimate = s.get<bool>("include_estimate", sc.include_estimate);
    cfg.pipeline.min_candidates = s.get<std::size_t>("min_candidates", cfg.pipeline.min_candidates);
    s.check(sc.t_max > 0.0, "t_max", "must be positive");
    s.check(sc.r_max > 0.0 && sc.r_max < std::numbers::pi, "r_max_deg", "must lie in (0, 180)");
    s.check(cfg.pipeline.min_candidates >= 1, "min_candidates", "must be at least 1");
    s.check(sc.n_candidates >= cfg.pipeline.min_candidates, "n_candidates", "below min_candidates");
    s.finish();
  }
  {
    Section s = root.child("protection_level");
    auto& q = cfg.pipeline.query;
    q.integrity_risk = s.get<double>("integrity_risk", q.integrity_risk);
    q.tolerance = s.get<double>("tolerance", q.tolerance);
    q.max_iterations = s.get<int>("max_iterations", q.max_iterations);
    s.check(q.integrity_risk > 0.0 && q.integrity_risk < 1.0, "integrity_risk", "must lie in (0, 1)");
    s.check(q.tolerance > 0.0, "tolerance", "must be positive");
    s.check(q.max_iterations > 0, "max_iterations", "must be positive");
    s.finish();
  }
  {
    Section s = root.child("alarm_limits");
    auto& al = cfg.pipeline.limits;
    al.lateral = s.get<double>("lateral", al.lateral);
    al.longitudinal = s.get<double>("longitudinal", al.longitudinal);
    al.vertical = s.get<double>("vertical", al.vertical);
    s.check(al.lateral > 0.0, "lateral", "must be positive");
    s.check(al.longitudinal > 0.0, "longitudinal", "must be positive");
    s.check(al.vertical > 0.0, "vertical", "must be positive");
    s.finish();
  }
  {
    Section s = root.child("estimator");
    const auto type = s.get<std::string>("type", "synthetic");
    if (type == "synthetic") {
      auto& o = cfg.estimator.synthetic;
      o.sigma_noise = s.get_vec3("sigma_noise", o.sigma_noise);
      o.miscalibration = s.get<double>("miscalibration", o.miscalibration);
      if (s.has("sigma_reported")) o.sigma_reported = s.get_vec3("sigma_reported", Vec3::Ones());
      o.sigma_rot = s.get<double>("sigma_rot_deg", o.sigma_rot / kDeg) * kDeg;
      o.outlier_probability = s.get<double>("outlier_probability", o.outlier_probability);
      o.outlier_scale = s.get<double>("outlier_scale", o.outlier_scale);
      s.check((o.sigma_noise.array() >= 0.0).all(), "sigma_noise", "must be non-negative");
      s.check(o.miscalibration > 0.0, "miscalibration", "must be positive");
      s.check((o.reported_sigma().array() > 0.0).all(), "sigma_noise",
              "reported sigma must be positive; set sigma_reported for noise-free runs");
      s.check(o.sigma_rot >= 0.0, "sigma_rot_deg", "must be non-negative");
      s.check(o.outlier_probability >= 0.0 && o.outlier_probability <= 1.0, "outlier_probability",
              "must lie in [0, 1]");
      s.check(o.outlier_scale > 0.0, "outlier_scale", "must be positive");
      cfg.estimator.kind = EstimatorSettings::Kind::Synthetic;
    } else if (type == "file") {
      const auto records = s.get<std::string>("records", "");
      s.check(!records.empty(), "records", "file estimator needs a records path");
      cfg.estimator.kind = EstimatorSettings::Kind::File;
      cfg.estimator.records = resolve(base_dir, records);
    } else {
      s.fail({"estimator", "type"}, "expected \"synthetic\" or \"file\", got \"" + type + "\"");
    }
    s.finish();
  }
  {
    Section s = root.child("rotation_uncertainty");
    const auto source = s.get<std::string>("source", "synthetic");
    cfg.rotation.samples = s.get<std::size_t>("samples", cfg.rotation.samples);
    if (source == "synthetic") {
      cfg.rotation.source = RotationSettings::Source::Synthetic;
      s.check(cfg.estimator.kind == EstimatorSettings::Kind::Synthetic, "source",
              "synthetic residuals need the synthetic estimator");
      s.check(cfg.rotation.samples >= kMinRotationSamples, "samples", "at least 1000 samples required");
    } else if (source == "file") {
      const auto file = s.get<std::string>("file", "");
      s.check(!file.empty(), "file", "rotation residual file path required");
      cfg.rotation.source = RotationSettings::Source::File;
      cfg.rotation.file = resolve(base_dir, file);
    } else if (source == "none") {
      cfg.rotation.source = RotationSettings::Source::None;
    } else {
      s.fail({"rotation_uncertainty", "source"}, "expected \"synthetic\", \"file\" or \"none\"");
    }
    s.finish();
  }
  {
    Section s = root.child("diagram");
    cfg.diagram_bins = s.get<std::size_t>("bins", cfg.diagram_bins);
    s.check(cfg.diagram_bins >= 2, "bins", "must be at least 2");
    s.finish();
  }
  {
    Section s = root.child("loss");
    cfg.loss.alpha_huber = s.get<double>("alpha_huber", cfg.loss.alpha_huber);
    cfg.loss.alpha_mle = s.get<double>("alpha_mle", cfg.loss.alpha_mle);
    cfg.loss.alpha_ang = s.get<double>("alpha_ang", cfg.loss.alpha_ang);
    cfg.loss.delta = s.get<double>("delta", cfg.loss.delta);
    s.check(cfg.loss.alpha_huber >= 0.0 && cfg.loss.alpha_mle >= 0.0 && cfg.loss.alpha_ang >= 0.0, "alpha_huber",
            "loss weights must be non-negative");
    s.check(cfg.loss.delta > 0.0, "delta", "must be positive");
    s.finish();
  }
  {
    Section sc = root.child("scenario");
    {
      Section s = sc.child("city");
      auto& c = cfg.city;
      c.blocks_x = s.get<int>("blocks_x", c.blocks_x);
      c.blocks_y = s.get<int>("blocks_y", c.blocks_y);
      c.block_size = s.get<double>("block_size", c.block_size);
      c.street_width = s.get<double>("street_width", c.street_width);
      c.wall_height = s.get<double>("wall_height", c.wall_height);
      c.point_density = s.get<double>("point_density", c.point_density);
      s.check(c.blocks_x >= 0 && c.blocks_y >= 0, "blocks_x", "block counts must be non-negative");
      s.check(c.block_size > 0.0, "block_size", "must be positive");
      s.check(c.street_width > 0.0, "street_width", "must be positive");
      s.check(c.wall_height > 0.0, "wall_height", "must be positive");
      s.check(c.point_density > 0.0, "point_density", "must be positive");
      s.finish();
    }
    {
      Section s = sc.child("trajectory");
      auto& t = cfg.trajectory;
      t.timesteps = s.get<std::size_t>("timesteps", t.timesteps);
      t.dt = s.get<double>("dt", t.dt);
      t.speed = s.get<double>("speed", t.speed);
      t.sensor_height = s.get<double>("sensor_height", t.sensor_height);
      t.max_translation_error = s.get<double>("max_translation_error", t.max_translation_error);
      t.max_rotation_error = s.get<double>("max_rotation_error_deg", t.max_rotation_error / kDeg) * kDeg;
      s.check(t.dt > 0.0, "dt", "must be positive");
      s.check(t.speed >= 0.0, "speed", "must be non-negative");
      s.check(t.max_translation_error >= 0.0, "max_translation_error", "must be non-negative");
      s.check(t.max_rotation_error >= 0.0 && t.max_rotation_error < std::numbers::pi, "max_rotation_error_deg",
              "must lie in [0, 180)");
      s.finish();
    }
    sc.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

std::string default_config_json() {
  return R"({
  "schema": "dpl-config/1",
  "seed": 1,
  "threads": 0,
  "variant": "VAR_EO",
  "sampling": {
    "t_max": 1.0,
    "r_max_deg": 5.0,
    "n_candidates": 24,
    "include_estimate": true,
    "min_candidates": 2
  },
  "protection_level": {
    "integrity_risk": 0.01,
    "tolerance": 0.0001,
    "max_iterations": 200
  },
  "alarm_limits": {
    "lateral": 0.85,
    "longitudinal": 1.50,
    "vertical": 1.47
  },
  "estimator": {
    "type": "synthetic",
    "sigma_noise": [0.2, 0.2, 0.1],
    "miscalibration": 1.0,
    "sigma_rot_deg": 0.3,
    "outlier_probability": 0.0,
    "outlier_scale": 10.0
  },
  "rotation_uncertainty": {
    "source": "synthetic",
    "samples": 100000
  },
  "diagram": {
    "bins": 20
  },
  "loss": {
    "alpha_huber": 1.0,
    "alpha_mle": 1.0,
    "alpha_ang": 1.0,
    "delta": 1.0
  },
  "scenario": {
    "city": {
      "blocks_x": 3,
      "blocks_y": 2,
      "block_size": 40.0,
      "street_width": 12.0,
      "wall_height": 8.0,
      "point_density": 2.0
    },
    "trajectory": {
      "timesteps": 200,
      "dt": 0.1,
      "speed": 10.0,
      "sensor_height": 1.5,
      "max_translation_error": 2.0,
      "max_rotation_error_deg": 10.0
    }
  }
}
)";
}

std::uint64_t sampling_seed(std::uint64_t master) {
  return derive_seed(master, {static_cast<std::uint64_t>(Stream::Sampling)});
}
std::uint64_t estimator_seed(std::uint64_t master) {
  return derive_seed(master, {static_cast<std::uint64_t>(Stream::Estimator)});
}
std::uint64_t residual_seed(std::uint64_t master) {
  return derive_seed(master, {static_cast<std::uint64_t>(Stream::RotationResiduals)});
}

std::shared_ptr<const ErrorEstimator> make_estimator(const RunConfig& cfg) {
  if (cfg.estimator.kind == EstimatorSettings::Kind::File) {
    return std::make_shared<const FileEstimator>(FileEstimator::load(cfg.estimator.records));
  }
  SyntheticOracleConfig oc = cfg.estimator.synthetic;
  oc.seed = estimator_seed(cfg.seed);
  return std::make_shared<const SyntheticOracle>(oc);
}

RotationUncertainty make_rotation_uncertainty(const RunConfig& cfg) {
  switch (cfg.rotation.source) {
    case RotationSettings::Source::None:
      return RotationUncertainty::zero();
    case RotationSettings::Source::File:
      return precompute_q(load_rotation_residuals(cfg.rotation.file));
    case RotationSettings::Source::Synthetic:
      break;
  }
  const auto residuals = synthetic_rotation_residuals(cfg.estimator.synthetic.sigma_rot, residual_seed(cfg.seed),
                                                      cfg.rotation.samples);
  return precompute_q(residuals);
}

Pipeline make_pipeline(const RunConfig& cfg, std::shared_ptr<const PointCloud> map) {
  PipelineConfig pc = cfg.pipeline;
  pc.sampling.seed = sampling_seed(cfg.seed);
  return Pipeline(pc, make_estimator(cfg), make_rotation_uncertainty(cfg), std::move(map));
}

}  // namespace dpl
