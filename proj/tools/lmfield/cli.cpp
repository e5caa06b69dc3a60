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

#include "cli.hpp"

#include <array>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmfield/binary_io.hpp"
#include "lmfield/errors.hpp"
#include "lmfield/face_model.hpp"
#include "lmfield/fitting.hpp"
#include "lmfield/json_io.hpp"
#include "lmfield/parallel.hpp"
#include "lmfield/radiance_field.hpp"
#include "lmfield/sampling.hpp"
#include "lmfield/tps_warp.hpp"
#include "lmfield/triangulation.hpp"
#include "pipeline.hpp"

namespace lmfield::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::PipelineConfig;

// Copies `value` into `dst` when the flag was given on the command line.
template <typename T, typename U>
void override_if(const CLI::Option* opt, const T& value, U& dst) {
  if (opt->count() > 0) dst = value;
}

PipelineConfig load_config(const std::string& path) {
  return path.empty() ? PipelineConfig{} : PipelineConfig::load(path);
}

void emit(const std::string& text, const std::string& output,
          std::ostream& out) {
  if (output.empty()) {
    out << text << "\n";
  } else {
    write_text_atomic(output, text + "\n");
  }
}

// Sampling flags shared by `sample` and `warp`.
struct SamplingFlags {
  std::string config;
  int resolution = kDefaultResolution;
  double threshold = kDefaultDensityThreshold;
  int levels = kDefaultEncodingLevels;
  bool encode = false;
  unsigned workers = 0;
  std::string region = "face";
  FineBoxConstants boxes;
  std::string output;

  CLI::Option* resolution_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  std::array<CLI::Option*, 4> box_opts{};

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Pipeline config file (JSON)")
        ->check(CLI::ExistingFile);
    resolution_opt =
        cmd->add_option("--resolution", resolution, "Voxels per box edge")
            ->capture_default_str()
            ->check(CLI::Range(2, 4096));
    threshold_opt = cmd->add_option("--threshold", threshold,
                                    "Density below which voxels are zeroed")
                        ->capture_default_str()
                        ->check(CLI::NonNegativeNumber);
    levels_opt = cmd->add_option("--levels", levels,
                                 "Position encoding frequencies L")
                     ->capture_default_str()
                     ->check(CLI::Range(0, 16));
    cmd->add_flag("--encode", encode,
                  "Append 3(1+2L) position encoding channels");
    workers_opt =
        cmd->add_option("--workers", workers, "Worker threads (0 = all cores)")
            ->capture_default_str();
    cmd->add_option("--region", region, "Sampling box")
        ->capture_default_str()
        ->check(CLI::IsMember({"face", "left_eye", "right_eye", "mouth",
                               "head"}));
    box_opts[0] = cmd->add_option("--face-size", boxes.face,
                                  "Face box half-extent / head scale")
                      ->capture_default_str();
    box_opts[1] = cmd->add_option("--eye-size", boxes.eye,
                                  "Eye box half-extent / head scale")
                      ->capture_default_str();
    box_opts[2] = cmd->add_option("--mouth-size", boxes.mouth,
                                  "Mouth box half-extent / head scale")
                      ->capture_default_str();
    box_opts[3] = cmd->add_option("--enlargement", boxes.enlargement,
                                  "Fine box enlargement factor")
                      ->capture_default_str();
    cmd->add_option("--output", output, "Output volume (FLNV)")->required();
  }

  // Config values first, then explicit flags.
  SamplingOptions options(FineBoxConstants& constants) const {
    const PipelineConfig cfg = load_config(config);
    SamplingOptions opt;
    opt.resolution = cfg.resolution;
    opt.threshold = cfg.threshold;
    opt.encoding_levels = cfg.encoding_levels;
    opt.workers = cfg.workers;
    opt.encode = encode;
    override_if(resolution_opt, resolution, opt.resolution);
    override_if(threshold_opt, threshold, opt.threshold);
    override_if(levels_opt, levels, opt.encoding_levels);
    override_if(workers_opt, workers, opt.workers);
    constants = cfg.boxes;
    override_if(box_opts[0], boxes.face, constants.face);
    override_if(box_opts[1], boxes.eye, constants.eye);
    override_if(box_opts[2], boxes.mouth, constants.mouth);
    override_if(box_opts[3], boxes.enlargement, constants.enlargement);
    opt.validate();
    return opt;
  }
};

OrientedBox region_box(const std::string& region, const VoxelGridField& field,
                       const std::optional<Landmarks68>& landmarks,
                       const FineBoxConstants& constants) {
  if (region == "head") {
    OrientedBox box;
    box.center = field.box().origin + 0.5 * field.box().extent;
    box.half_extent = 0.5 * field.box().extent.maxCoeff();
    return box;
  }
  if (!landmarks) {
    throw InvalidArgument("region '" + region + "' needs --landmarks");
  }
  const FineBoxes boxes = fine_boxes(*landmarks, TransformMatrix(), constants);
  if (region == "left_eye") return boxes.left_eye;
  if (region == "right_eye") return boxes.right_eye;
  if (region == "mouth") return boxes.mouth;
  return boxes.face;
}

json box_json(const OrientedBox& box) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({box.rotation(r, 0), box.rotation(r, 1), box.rotation(r, 2)});
  }
  return {{"center", {box.center.x(), box.center.y(), box.center.z()}},
          {"rotation", rot},
          {"half_extent", box.half_extent}};
}

json volume_summary(const FeatureVolume& v, const std::string& path) {
  return {{"volume", path},
          {"resolution", v.resolution()},
          {"channels", v.channels()},
          {"occupied", v.occupied_count()},
          {"box", box_json(v.box())}};
}

json error_json(const char* category, const std::string& message) {
  return {{"error", category}, {"message", message}};
}

int report(std::ostream& err, const json& j, int code) {
  err << j.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Landmark and radiance field volume toolkit", "lmfield"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic core, base "
                                            "landmark sets and a head field");
  std::string synth_config, synth_dir;
  std::uint64_t synth_seed = 1;
  int synth_exp = 52, synth_id = 50, synth_base = 20, synth_res = 64;
  unsigned synth_workers = 0;
  synth->add_option("--config", synth_config, "Pipeline config file (JSON)")
      ->check(CLI::ExistingFile);
  auto* synth_dir_opt =
      synth->add_option("--output-dir", synth_dir, "Output directory");
  auto* synth_seed_opt =
      synth->add_option("--seed", synth_seed, "Master seed")
          ->capture_default_str();
  auto* synth_exp_opt =
      synth->add_option("--n-exp", synth_exp, "Expression dimension")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* synth_id_opt =
      synth->add_option("--n-id", synth_id, "Identity dimension")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* synth_base_opt =
      synth->add_option("--base", synth_base, "Base expression count")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* synth_res_opt =
      synth->add_option("--field-resolution", synth_res,
                        "Head field grid nodes per axis")
          ->capture_default_str()
          ->check(CLI::Range(2, 4096));
  auto* synth_workers_opt =
      synth->add_option("--workers", synth_workers,
                        "Worker threads (0 = all cores)")
          ->capture_default_str();
  synth->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(synth_config);
      override_if(synth_dir_opt, fs::path(synth_dir), cfg.output_dir);
      override_if(synth_seed_opt, synth_seed, cfg.seed);
      override_if(synth_exp_opt, synth_exp, cfg.n_exp);
      override_if(synth_id_opt, synth_id, cfg.n_id);
      override_if(synth_base_opt, synth_base, cfg.base_expressions);
      override_if(synth_res_opt, synth_res, cfg.field_resolution);
      override_if(synth_workers_opt, synth_workers, cfg.workers);
      if (cfg.expression_count < cfg.base_expressions) {
        cfg.expression_count = cfg.base_expressions;
      }
      const pipeline::SynthOutputs o = pipeline::run_synth(cfg);
      json j;
      j["core"] = o.core.generic_string();
      j["field"] = o.field.generic_string();
      j["manifest"] = o.manifest.generic_string();
      j["landmarks"] = json::array();
      for (const auto& p : o.landmarks) j["landmarks"].push_back(p.generic_string());
      out << j.dump(2) << "\n";
    };
  });

  // interpolate
  auto* interp = app.add_subcommand(
      "interpolate", "Extend a base expression set with random convex pairs");
  std::string interp_input, interp_output;
  int interp_count = 110;
  std::uint64_t interp_seed = 1;
  interp->add_option("--input", interp_input, "Directory of base landmark files")
      ->required()
      ->check(CLI::ExistingDirectory);
  interp->add_option("--output", interp_output, "Output directory")->required();
  interp->add_option("--count", interp_count, "Total members after interpolation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  interp->add_option("--seed", interp_seed, "Pairing and weight seed")
      ->capture_default_str();
  interp->callback([&] {
    action = [&] {
      const pipeline::ExpressionSet base =
          pipeline::load_expression_set(interp_input);
      const pipeline::ExpressionSet set =
          pipeline::interpolate_expressions(base, interp_count, interp_seed);
      pipeline::save_expression_set(set, interp_output);
      out << json({{"base", base.size()}, {"count", set.size()},
                   {"output", interp_output}})
                 .dump(2)
          << "\n";
    };
  });

  // augment
  auto* augment = app.add_subcommand(
      "augment", "Warp-sample one volume per expression from synth outputs");
  std::string aug_config, aug_dir, aug_mode = "expression";
  std::uint64_t aug_seed = 1;
  int aug_count = 110, aug_res = 32, aug_levels = kDefaultEncodingLevels;
  double aug_threshold = kDefaultDensityThreshold;
  bool aug_encode = true;
  unsigned aug_workers = 0;
  augment->add_option("--config", aug_config, "Pipeline config file (JSON)")
      ->check(CLI::ExistingFile);
  auto* aug_dir_opt = augment->add_option(
      "--output-dir", aug_dir, "Directory holding the synth outputs");
  auto* aug_seed_opt = augment->add_option("--seed", aug_seed, "Master seed")
                           ->capture_default_str();
  auto* aug_count_opt =
      augment->add_option("--count", aug_count, "Expressions after interpolation")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* aug_res_opt =
      augment->add_option("--resolution", aug_res, "Voxels per box edge")
          ->capture_default_str()
          ->check(CLI::Range(2, 4096));
  auto* aug_threshold_opt =
      augment->add_option("--threshold", aug_threshold,
                          "Density below which voxels are zeroed")
          ->capture_default_str()
          ->check(CLI::NonNegativeNumber);
  auto* aug_levels_opt =
      augment->add_option("--levels", aug_levels, "Position encoding frequencies L")
          ->capture_default_str()
          ->check(CLI::Range(0, 16));
  auto* aug_encode_opt =
      augment->add_option("--encode", aug_encode,
                          "Append position encoding channels")
          ->capture_default_str();
  auto* aug_mode_opt =
      augment->add_option("--mode", aug_mode,
                          "expression: face box per expression; coarse: "
                          "head box under random scale, rotation, translation")
          ->capture_default_str()
          ->check(CLI::IsMember({"expression", "coarse"}));
  auto* aug_workers_opt =
      augment->add_option("--workers", aug_workers,
                          "Worker threads (0 = all cores)")
          ->capture_default_str();
  augment->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(aug_config);
      if (aug_config.empty()) cfg.augment_resolution = aug_res;
      override_if(aug_dir_opt, fs::path(aug_dir), cfg.output_dir);
      override_if(aug_seed_opt, aug_seed, cfg.seed);
      override_if(aug_count_opt, aug_count, cfg.expression_count);
      override_if(aug_res_opt, aug_res, cfg.augment_resolution);
      override_if(aug_threshold_opt, aug_threshold, cfg.threshold);
      override_if(aug_levels_opt, aug_levels, cfg.encoding_levels);
      override_if(aug_encode_opt, aug_encode, cfg.encode);
      override_if(aug_workers_opt, aug_workers, cfg.workers);
      if (aug_mode_opt->count() > 0) {
        cfg.augment_mode = pipeline::parse_augment_mode(aug_mode);
      }
      const pipeline::AugmentOutputs o = pipeline::run_augment(cfg);
      out << json({{"manifest", o.manifest.generic_string()},
                   {"count", o.items.size()}})
                 .dump(2)
          << "\n";
    };
  });

  // sample
  auto* sample = app.add_subcommand(
      "sample", "Sample a feature volume from a voxel grid field");
  SamplingFlags sample_flags;
  std::string sample_field, sample_landmarks;
  sample->add_option("--field", sample_field, "Voxel grid field (FLNV)")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--landmarks", sample_landmarks,
                     "Landmark file defining the fine boxes")
      ->check(CLI::ExistingFile);
  sample_flags.add_to(sample);
  sample->callback([&] {
    action = [&] {
      FineBoxConstants constants;
      const SamplingOptions opt = sample_flags.options(constants);
      const VoxelGridField field = load_voxel_grid(sample_field);
      std::optional<Landmarks68> lm;
      if (!sample_landmarks.empty()) lm = load_landmarks(sample_landmarks);
      const OrientedBox box =
          region_box(sample_flags.region, field, lm, constants);
      const FeatureVolume v = sample_volume(field, box, opt);
      save_feature_volume(v, sample_flags.output);
      out << volume_summary(v, sample_flags.output).dump(2) << "\n";
    };
  });

  // warp
  auto* warp = app.add_subcommand(
      "warp", "Sample a field through a TPS warp so it shows the target "
              "landmark configuration");
  SamplingFlags warp_flags;
  std::string warp_field, warp_source, warp_target, warp_json;
  warp->add_option("--field", warp_field, "Voxel grid field (FLNV)")
      ->required()
      ->check(CLI::ExistingFile);
  warp->add_option("--source", warp_source, "Landmarks matching the field")
      ->required()
      ->check(CLI::ExistingFile);
  warp->add_option("--target", warp_target, "Landmarks to warp towards")
      ->required()
      ->check(CLI::ExistingFile);
  warp->add_option("--warp-out", warp_json, "Write the fitted warp (JSON)");
  warp_flags.add_to(warp);
  warp->callback([&] {
    action = [&] {
      FineBoxConstants constants;
      const SamplingOptions opt = warp_flags.options(constants);
      const VoxelGridField field = load_voxel_grid(warp_field);
      const Landmarks68 source = load_landmarks(warp_source);
      const Landmarks68 target = load_landmarks(warp_target);
      const TpsWarp w = fit_pullback_warp(source, target);
      const OrientedBox box =
          region_box(warp_flags.region, field, target, constants);
      const FeatureVolume v = warp_sample(field, w, box, opt);
      save_feature_volume(v, warp_flags.output);
      if (!warp_json.empty()) write_text_atomic(warp_json, warp_to_json(w));
      out << volume_summary(v, warp_flags.output).dump(2) << "\n";
    };
  });

  // fit
  auto* fit = app.add_subcommand(
      "fit", "Fit identity, expression and transform to observed landmarks");
  std::string fit_config, fit_core, fit_observed, fit_output;
  double fit_omega = 10.0, fit_epsilon = 2.0;
  ConvergenceCriteria conv;
  fit->add_option("--config", fit_config, "Pipeline config file (JSON)")
      ->check(CLI::ExistingFile);
  fit->add_option("--core", fit_core, "Bilinear core (FLNC)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--observed", fit_observed, "Observed landmarks (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--output", fit_output, "Report path (default stdout)");
  auto* fit_omega_opt =
      fit->add_option("--omega", fit_omega, "Wing loss omega")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* fit_epsilon_opt =
      fit->add_option("--epsilon", fit_epsilon, "Wing loss epsilon")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  fit->add_option("--max-iterations", conv.max_iterations, "Iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit->add_option("--gradient-tolerance", conv.gradient_tolerance,
                  "Stop when the gradient infinity norm is below this")
      ->capture_default_str();
  fit->add_option("--step-tolerance", conv.step_tolerance,
                  "Stop when the step norm is below this")
      ->capture_default_str();
  fit->callback([&] {
    action = [&] {
      const PipelineConfig cfg = load_config(fit_config);
      double omega = cfg.wing.omega(), epsilon = cfg.wing.epsilon();
      override_if(fit_omega_opt, fit_omega, omega);
      override_if(fit_epsilon_opt, fit_epsilon, epsilon);
      const BilinearCore core = load_core(fit_core);
      const Landmarks68 observed = load_landmarks(fit_observed);
      FitProblem prob = FitProblem::with_default_init(core, observed);
      prob.wing = WingParams(omega, epsilon);
      prob.convergence = conv;
      const FitResult r = fit_landmarks(prob);
      emit(fit_report_to_json(r, observed), fit_output, out);
    };
  });

  // triangulate
  auto* tri = app.add_subcommand(
      "triangulate", "Triangulate 3D landmarks from multi-view 2D detections");
  std::string tri_cameras, tri_obs, tri_output, tri_report;
  unsigned tri_workers = 0;
  tri->add_option("--cameras", tri_cameras, "Camera matrices (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  tri->add_option("--observations", tri_obs, "Per-view 2D landmarks (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  tri->add_option("--output", tri_output, "Landmarks (default stdout)");
  tri->add_option("--report", tri_report,
                  "Per-landmark reprojection residuals (JSON)");
  tri->add_option("--workers", tri_workers, "Worker threads (0 = all cores)")
      ->capture_default_str();
  tri->callback([&] {
    action = [&] {
      const std::vector<CameraPose> cams =
          cameras_from_json(read_text(tri_cameras));
      const std::vector<ViewObservations> views =
          observations_from_json(read_text(tri_obs));
      if (views.size() != cams.size()) {
        throw FormatError(FormatError::Kind::kSchema,
                          "observations list " + std::to_string(views.size()) +
                              " views but there are " +
                              std::to_string(cams.size()) + " cameras",
                          "/");
      }
      std::array<Triangulation, kNumLandmarks> results;
      parallel_for(kNumLandmarks, tri_workers, [&](std::size_t i) {
        std::vector<Observation> obs;
        for (std::size_t v = 0; v < views.size(); ++v) {
          if (views[v][i]) obs.push_back({cams[v], *views[v][i]});
        }
        if (obs.size() < 2) {
          throw InvalidArgument("landmark " + std::to_string(i) +
                                " is visible in fewer than two views");
        }
        results[i] = triangulate(obs);
      });
      Landmarks68::Matrix m;
      json residuals = json::array();
      for (int i = 0; i < kNumLandmarks; ++i) {
        m.col(i) = results[i].point;
        residuals.push_back(results[i].rms_reprojection_px);
      }
      emit(landmarks_to_json(Landmarks68(m)), tri_output, out);
      if (!tri_report.empty()) {
        write_text_atomic(tri_report,
                          json({{"rms_reprojection_px", residuals}}).dump(2) +
                              "\n");
      }
    };
  });

  // eval
  auto* eval = app.add_subcommand(
      "eval", "Region-wise mean wing loss of predicted landmarks");
  std::string eval_pred, eval_gt, eval_output, eval_config;
  double eval_omega = 10.0, eval_epsilon = 2.0;
  eval->add_option("--config", eval_config, "Pipeline config file (JSON)")
      ->check(CLI::ExistingFile);
  eval->add_option("--pred", eval_pred, "Predicted landmarks (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt, "Ground-truth landmarks (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--output", eval_output, "Report path (default stdout)");
  auto* eval_omega_opt =
      eval->add_option("--omega", eval_omega, "Wing loss omega")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* eval_epsilon_opt =
      eval->add_option("--epsilon", eval_epsilon, "Wing loss epsilon")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  eval->callback([&] {
    action = [&] {
      const PipelineConfig cfg = load_config(eval_config);
      double omega = cfg.wing.omega(), epsilon = cfg.wing.epsilon();
      override_if(eval_omega_opt, eval_omega, omega);
      override_if(eval_epsilon_opt, eval_epsilon, epsilon);
      const RegionReport r =
          evaluate(load_landmarks(eval_pred), load_landmarks(eval_gt),
                   WingParams(omega, epsilon));
      emit(region_report_to_json(r), eval_output, out);
    };
  });

  // export-ply
  auto* ply = app.add_subcommand(
      "export-ply", "Write occupied voxels of a feature volume as ASCII PLY");
  std::string ply_volume, ply_output;
  ply->add_option("--volume", ply_volume, "Feature volume (FLNV)")
      ->required()
      ->check(CLI::ExistingFile);
  ply->add_option("--output", ply_output, "PLY path")->required();
  ply->callback([&] {
    action = [&] {
      write_text_atomic(ply_output,
                        occupied_voxels_ply(load_feature_volume(ply_volume)));
    };
  });

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report(err, error_json("usage", e.what()), kExitUsage);
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const FormatError& e) {
    json j = error_json("format", e.what());
    j["kind"] = to_string(e.kind());
    j["path"] = e.path();
    return report(err, j, kExitFormat);
  } catch (const InvalidArgument& e) {
    return report(err, error_json("invalid_argument", e.what()), kExitUsage);
  } catch (const NumericalError& e) {
    return report(err, error_json("numerical", e.what()), kExitNumerical);
  } catch (const IoError& e) {
    return report(err, error_json("io", e.what()), kExitIo);
  } catch (const std::filesystem::filesystem_error& e) {
    return report(err, error_json("io", e.what()), kExitIo);
  } catch (const std::exception& e) {
    return report(err, error_json("internal", e.what()), kExitIo);
  }
}

}  // namespace lmfield::cli
