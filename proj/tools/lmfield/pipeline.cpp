// Copyright 2026 The lmfield Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/face_model.hpp"
#include "lmfield/json_io.hpp"
#include "lmfield/parallel.hpp"
#include "lmfield/radiance_field.hpp"
#include "lmfield/tps_warp.hpp"

namespace lmfield::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Stream : std::uint64_t {
  kCoreStream = 1,
  kIdentityStream = 2,
  kExpressionStream = 3,
  kFieldStream = 4,
  kInterpolationStream = 5,
  kAugmentStream = 6,
};

[[noreturn]] void schema_error(const std::string& path,
                               const std::string& reason) {
  throw FormatError(FormatError::Kind::kSchema, path + ": " + reason, path);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatError::Kind::kSchema,
                      std::string("invalid JSON: ") + e.what(), "/");
  }
}

// Typed accessors for optional keys of a config section.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_error(path_.empty() ? "/" : path_,
                                      "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items()) {
      if (!known.contains(key)) schema_error(path_ + "/" + key, "unknown key");
    }
  }

  const json* find(const char* key) const {
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<Section> section(const char* key) const {
    if (const json* v = find(key)) return Section(*v, path_ + "/" + key);
    return std::nullopt;
  }

  void get(const char* key, double& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number() || !std::isfinite(v->get<double>())) {
        schema_error(path_ + "/" + key, "expected a finite number");
      }
      out = v->get<double>();
    }
  }

  void get(const char* key, int& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) {
        schema_error(path_ + "/" + key, "expected an integer");
      }
      const auto value = v->get<std::int64_t>();
      if (value < std::numeric_limits<int>::min() ||
          value > std::numeric_limits<int>::max()) {
        schema_error(path_ + "/" + key, "integer out of range");
      }
      out = static_cast<int>(value);
    }
  }

  void get(const char* key, std::uint64_t& out) const {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        schema_error(path_ + "/" + key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void get(const char* key, unsigned& out) const {
    std::uint64_t wide = out;
    get(key, wide);
    if (wide > std::numeric_limits<unsigned>::max()) {
      schema_error(path_ + "/" + key, "integer out of range");
    }
    out = static_cast<unsigned>(wide);
  }

  void get(const char* key, bool& out) const {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) schema_error(path_ + "/" + key, "expected a bool");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) const {
    if (const json* v = find(key)) {
      if (!v->is_string()) schema_error(path_ + "/" + key, "expected a string");
      out = v->get<std::string>();
    }
  }

 private:
  const json& j_;
  std::string path_;
};

json box_to_json(const OrientedBox& box) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({box.rotation(r, 0), box.rotation(r, 1), box.rotation(r, 2)});
  }
  return {{"center", {box.center.x(), box.center.y(), box.center.z()}},
          {"rotation", rot},
          {"half_extent", box.half_extent}};
}

json augment_to_json(const AugmentTransform& a) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({a.r(i, 0), a.r(i, 1), a.r(i, 2)});
  return {{"tau", a.tau}, {"r", r}, {"t", {a.t.x(), a.t.y(), a.t.z()}}};
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return p.lexically_relative(base).generic_string();
}

Eigen::VectorXd random_convex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 + unit(rng);
  return w / w.sum();
}

std::string indexed_name(const char* prefix, int index, int width) {
  std::string digits = std::to_string(index);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, width - digits.size(), '0');
  }
  return prefix + digits;
}

}  // namespace

const char* to_string(AugmentMode mode) noexcept {
  return mode == AugmentMode::kCoarse ? "coarse" : "expression";
}

AugmentMode parse_augment_mode(const std::string& text) {
  if (text == "expression") return AugmentMode::kExpression;
  if (text == "coarse") return AugmentMode::kCoarse;
  throw InvalidArgument("augment mode must be 'expression' or 'coarse', got '" +
                        text + "'");
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  const fs::path dir = path.parent_path().empty() ? fs::path(".")
                                                  : path.parent_path();
  return from_json(read_text(path), dir);
}

PipelineConfig PipelineConfig::from_json(const std::string& text,
                                         const fs::path& base_dir) {
  const json j = parse_json(text);
  PipelineConfig c;
  const Section root(j, "");
  root.allow({"output_dir", "seed", "workers", "core", "expressions",
              "sampling", "wing", "boxes", "augment"});
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  if (auto s = root.section("core")) {
    s->allow({"n_exp", "n_id"});
    s->get("n_exp", c.n_exp);
    s->get("n_id", c.n_id);
  }
  if (auto s = root.section("expressions")) {
    s->allow({"base", "count"});
    s->get("base", c.base_expressions);
    s->get("count", c.expression_count);
  }
  if (auto s = root.section("sampling")) {
    s->allow({"resolution", "augment_resolution", "field_resolution",
              "threshold", "encode", "encoding_levels"});
    s->get("resolution", c.resolution);
    s->get("augment_resolution", c.augment_resolution);
    s->get("field_resolution", c.field_resolution);
    s->get("threshold", c.threshold);
    s->get("encode", c.encode);
    s->get("encoding_levels", c.encoding_levels);
  }
  if (auto s = root.section("wing")) {
    s->allow({"omega", "epsilon"});
    double omega = c.wing.omega();
    double epsilon = c.wing.epsilon();
    s->get("omega", omega);
    s->get("epsilon", epsilon);
    try {
      c.wing = WingParams(omega, epsilon);
    } catch (const InvalidArgument& e) {
      schema_error("/wing", e.what());
    }
  }
  if (auto s = root.section("boxes")) {
    s->allow({"face", "eye", "mouth", "enlargement"});
    s->get("face", c.boxes.face);
    s->get("eye", c.boxes.eye);
    s->get("mouth", c.boxes.mouth);
    s->get("enlargement", c.boxes.enlargement);
  }
  if (auto s = root.section("augment")) {
    s->allow({"mode"});
    std::string mode = to_string(c.augment_mode);
    s->get("mode", mode);
    try {
      c.augment_mode = parse_augment_mode(mode);
    } catch (const InvalidArgument& e) {
      schema_error("/augment/mode", e.what());
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    schema_error("/", e.what());
  }
  return c;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["output_dir"] = output_dir.generic_string();
  j["seed"] = seed;
  j["workers"] = workers;
  j["core"] = {{"n_exp", n_exp}, {"n_id", n_id}};
  j["expressions"] = {{"base", base_expressions}, {"count", expression_count}};
  j["sampling"] = {{"resolution", resolution},
                   {"augment_resolution", augment_resolution},
                   {"field_resolution", field_resolution},
                   {"threshold", threshold},
                   {"encode", encode},
                   {"encoding_levels", encoding_levels}};
  j["wing"] = {{"omega", wing.omega()}, {"epsilon", wing.epsilon()}};
  j["boxes"] = {{"face", boxes.face},
                {"eye", boxes.eye},
                {"mouth", boxes.mouth},
                {"enlargement", boxes.enlargement}};
  j["augment"] = {{"mode", to_string(augment_mode)}};
  return j.dump(2);
}

void PipelineConfig::validate() const {
  if (n_exp < 1 || n_id < 1) {
    throw InvalidArgument("core dimensions must be >= 1");
  }
  if (base_expressions < 1) {
    throw InvalidArgument("base expression count must be >= 1");
  }
  if (expression_count < base_expressions) {
    throw InvalidArgument("expression count must be >= the base set size");
  }
  for (int res : {resolution, augment_resolution, field_resolution}) {
    if (res < 2) throw InvalidArgument("resolutions must be >= 2");
  }
  if (!(threshold >= 0.0)) throw InvalidArgument("threshold must be >= 0");
  if (encoding_levels < 0) {
    throw InvalidArgument("encoding levels must be >= 0");
  }
  for (double v : {boxes.face, boxes.eye, boxes.mouth, boxes.enlargement}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("box constants must be positive");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

Landmarks68 blend_expressions(const Landmarks68& a, const Landmarks68& b,
                              double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("blend weight must lie in [0, 1]");
  }
  return Landmarks68(lambda * a.matrix() + (1.0 - lambda) * b.matrix());
}

ExpressionSet interpolate_expressions(const ExpressionSet& base, int count,
                                      std::uint64_t seed) {
  const int n = static_cast<int>(base.size());
  if (count < n) {
    throw InvalidArgument("interpolation count " + std::to_string(count) +
                          " is smaller than the base set (" +
                          std::to_string(n) + ")");
  }
  ExpressionSet out = base;
  if (count == n) return out;
  if (n < 2) {
    throw InvalidArgument("interpolation needs at least two base members");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_a(0, n - 1);
  std::uniform_int_distribution<int> pick_b(0, n - 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int width = std::max<int>(3, std::to_string(count).size());
  for (int m = n; m < count; ++m) {
    const int a = pick_a(rng);
    int b = pick_b(rng);
    if (b >= a) ++b;
    double lambda = 0.0;
    while (lambda == 0.0) lambda = unit(rng);
    const Landmarks68 lm = blend_expressions(
        base.members[a].landmarks, base.members[b].landmarks, lambda);
    out.members.push_back(
        {indexed_name("interp_", m, width), lm, a, b, lambda});
  }
  return out;
}

ExpressionSet load_expression_set(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("expression directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().stem().string().find("manifest") == std::string::npos) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  ExpressionSet set;
  for (const fs::path& f : files) {
    set.members.push_back({f.stem().string(), load_landmarks(f), {}, {}, 1.0});
  }
  if (set.members.empty()) {
    throw IoError("no landmark files in " + dir.string());
  }
  return set;
}

void save_expression_set(const ExpressionSet& set, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest = json::array();
  for (const auto& m : set.members) {
    const fs::path file = dir / (m.name + ".json");
    save_landmarks(m.landmarks, file);
    json entry = {{"name", m.name}, {"file", file.filename().string()}};
    if (m.a) {
      entry["a"] = set.members[*m.a].name;
      entry["b"] = set.members[*m.b].name;
      entry["lambda"] = m.lambda;
    }
    manifest.push_back(std::move(entry));
  }
  write_text_atomic(dir / "expressions_manifest.json", manifest.dump(2) + "\n");
}

SynthOutputs run_synth(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.landmarks_dir());
  SynthOutputs out;

  const BilinearCore core =
      synth_core(derive_seed(config.seed, kCoreStream), config.n_exp,
                 config.n_id);
  out.core = config.core_path();
  save_core(core, out.core);

  std::mt19937_64 id_rng(derive_seed(config.seed, kIdentityStream));
  const IdentityWeights id{random_convex(id_rng, config.n_id)};

  std::mt19937_64 exp_rng(derive_seed(config.seed, kExpressionStream));
  std::uniform_real_distribution<double> amplitude(0.5, 2.0);
  json expressions = json::array();
  Landmarks68 neutral;
  const int width = std::max<int>(2, std::to_string(config.base_expressions).size());
  for (int k = 0; k < config.base_expressions; ++k) {
    Eigen::VectorXd w = one_hot(config.n_exp, 0);
    int mode = 0;
    double a = 0.0;
    if (k > 0 && config.n_exp > 1) {
      mode = 1 + (k - 1) % (config.n_exp - 1);
      a = amplitude(exp_rng);
      w = (1.0 - a) * one_hot(config.n_exp, 0) + a * one_hot(config.n_exp, mode);
    }
    const Landmarks68 lm =
        generate_landmarks(core, id, ExpressionWeights{w});
    if (k == 0) neutral = lm;
    const std::string name = indexed_name("expr_", k, width);
    const fs::path file = config.landmarks_dir() / (name + ".json");
    save_landmarks(lm, file);
    out.landmarks.push_back(file);
    expressions.push_back({{"name", name},
                           {"file", relative_to(file, config.output_dir)},
                           {"mode", mode},
                           {"amplitude", a}});
  }

  const std::uint64_t field_seed = derive_seed(config.seed, kFieldStream);
  const SyntheticHeadField head = make_synthetic_head(neutral, field_seed);
  const int r = config.field_resolution;
  out.field = config.field_path();
  save_voxel_grid(bake_to_grid(head, GridBox{}, {r, r, r}, config.workers),
                  out.field);

  json manifest;
  manifest["format"] = "lmfield-synth";
  manifest["version"] = 1;
  manifest["seed"] = config.seed;
  manifest["core"] = {{"file", relative_to(out.core, config.output_dir)},
                      {"n_exp", config.n_exp},
                      {"n_id", config.n_id}};
  manifest["identity_weights"] =
      std::vector<double>(id.w.data(), id.w.data() + id.w.size());
  manifest["expressions"] = expressions;
  manifest["field"] = {{"file", relative_to(out.field, config.output_dir)},
                       {"resolution", r},
                       {"seed", field_seed}};
  out.manifest = config.output_dir / "synth_manifest.json";
  write_text_atomic(out.manifest, manifest.dump(2) + "\n");
  return out;
}

AugmentOutputs run_augment(const PipelineConfig& requested) {
  const ExpressionSet base = load_expression_set(requested.landmarks_dir());
  PipelineConfig config = requested;
  config.base_expressions = static_cast<int>(base.size());
  config.validate();
  const VoxelGridField field = load_voxel_grid(config.field_path());
  const ExpressionSet set = interpolate_expressions(
      base, config.expression_count,
      derive_seed(config.seed, kInterpolationStream));
  const Landmarks68& neutral = base.members.front().landmarks;

  const fs::path dir = config.augment_dir();
  fs::create_directories(dir / "items");
  SamplingOptions opt;
  opt.resolution = config.augment_resolution;
  opt.threshold = config.threshold;
  opt.encode = config.encode;
  opt.encoding_levels = config.encoding_levels;
  opt.workers = 1;
  opt.validate();

  const int n = static_cast<int>(set.size());
  const int width = std::max<int>(3, std::to_string(n).size());
  AugmentOutputs out;
  out.items.resize(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    const auto& member = set.members[i];
    AugmentItem& item = out.items[i];
    item.index = static_cast<int>(i);
    item.expression = member.name;
    item.seed = derive_seed(config.seed, kAugmentStream, i);
    const TpsWarp warp = fit_pullback_warp(neutral, member.landmarks);

    Landmarks68 gt = member.landmarks;
    FeatureVolume volume(2, kRawChannels, OrientedBox{});
    if (config.augment_mode == AugmentMode::kExpression) {
      item.box = fine_boxes(member.landmarks, TransformMatrix(), config.boxes)
                     .face;
      volume = warp_sample(field, warp, item.box, opt);
    } else {
      const AugmentTransform a = random_augment(item.seed);
      item.transform = a;
      item.box = OrientedBox{};
      const FeatureVolume moved =
          warp_sample(field, warp, apply_augment(a, item.box), opt);
      volume = FeatureVolume(moved.resolution(), moved.channels(), item.box,
                             moved.data());
      Landmarks68::Matrix m;
      for (int k = 0; k < kNumLandmarks; ++k) {
        m.col(k) = a.unapply(member.landmarks.point(k));
      }
      gt = Landmarks68(m);
    }

    const std::string stem = indexed_name("item_", item.index, width);
    item.volume = dir / "items" / (stem + ".flnv");
    item.landmarks = dir / "items" / (stem + ".json");
    save_feature_volume(volume, item.volume);
    save_landmarks(gt, item.landmarks);
    item.volume_sha256 = sha256_hex(read_file(item.volume));
    item.landmarks_sha256 = sha256_hex(read_file(item.landmarks));
  });

  json items = json::array();
  for (const AugmentItem& item : out.items) {
    json entry = {{"index", item.index},
                  {"expression", item.expression},
                  {"seed", item.seed},
                  {"volume", relative_to(item.volume, dir)},
                  {"landmarks", relative_to(item.landmarks, dir)},
                  {"volume_sha256", item.volume_sha256},
                  {"landmarks_sha256", item.landmarks_sha256},
                  {"box", box_to_json(item.box)}};
    if (item.transform) entry["augment"] = augment_to_json(*item.transform);
    items.push_back(std::move(entry));
  }
  json manifest;
  manifest["format"] = "lmfield-augment";
  manifest["version"] = 1;
  manifest["mode"] = to_string(config.augment_mode);
  manifest["seed"] = config.seed;
  manifest["resolution"] = opt.resolution;
  manifest["threshold"] = opt.threshold;
  manifest["encode"] = opt.encode;
  manifest["encoding_levels"] = opt.encoding_levels;
  manifest["channels"] = kRawChannels + opt.encoding_channels();
  manifest["count"] = n;
  manifest["items"] = std::move(items);
  out.manifest = dir / "manifest.json";
  write_text_atomic(out.manifest, manifest.dump(2) + "\n");
  return out;
}

}  // namespace lmfield::pipeline
