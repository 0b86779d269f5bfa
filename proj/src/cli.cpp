#include "gsr/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "gsr/backward.hpp"
#include "gsr/dataset.hpp"
#include "gsr/downsampler.hpp"
#include "gsr/metrics.hpp"
#include "gsr/netpbm.hpp"
#include "gsr/pipeline.hpp"
#include "gsr/training.hpp"

namespace gsr::cli {
namespace {

const std::map<std::string, FeatureMode> kFeatureModes{{"colour", FeatureMode::colour}, {"learned", FeatureMode::learned}};
const std::map<std::string, LossKind> kLossKinds{{"l1", LossKind::l1}, {"mse", LossKind::mse}};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void warn_unusual_scale(int k, std::ostream& err) {
  if (k != 1 && k != 4 && k != 8 && k != 16)
    err << "warning: scale " << k << " is outside the usual set {1, 4, 8, 16}\n";
}

struct ModelFlags {
  std::string features = "colour";
  std::string params_path;
  double raw_mu = 0.0;

  void add(CLI::App* app) {
    app->add_option("--features", features, "colour | learned")
        ->check(CLI::IsMember({"colour", "learned"}))
        ->capture_default_str();
    app->add_option("--params", params_path, "parameter file written by `train`");
    app->add_option("--raw-mu", raw_mu, "log affinity scale for colour features without --params")->capture_default_str();
  }

  Model load(int guide_channels) const {
    const FeatureMode mode = kFeatureModes.at(features);
    if (!params_path.empty()) {
      Model m{mode, load_params(params_path)};
      if (mode == FeatureMode::learned && m.params.input_channels() != guide_channels + 1)
        throw std::invalid_argument("parameter file expects " + std::to_string(m.params.input_channels() - 1) +
                                    " guide channels, guide has " + std::to_string(guide_channels));
      return m;
    }
    if (mode == FeatureMode::learned) throw std::invalid_argument("--features learned requires --params");
    Model m = make_model(mode, guide_channels, 0);
    m.params.raw_mu() = raw_mu;
    return m;
  }
};

struct SolveFlags {
  double lambda = 0.1;
  double tol = 1e-7;
  int max_iter = 0;

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "regularization weight (> 0)")->capture_default_str();
    app->add_option("--tol", tol, "relative CG residual tolerance")->capture_default_str();
    app->add_option("--max-iter", max_iter, "CG iteration cap (0: 10 sqrt(HW))")->capture_default_str();
  }
  SolveOptions options() const { return {tol, max_iter}; }
};

DepthImage load_depth_scaled(const std::string& path, const std::string& mask_path, double depth_scale) {
  DepthImage d = load_depth(path);
  if (!mask_path.empty()) {
    const Mask m = load_mask(mask_path, d.height, d.width);
    for (std::size_t p = 0; p < m.size(); ++p) d.valid[p] = d.valid[p] && m[p];
  }
  for (double& v : d.data) v *= depth_scale;
  return d;
}

std::vector<int> parse_scales(const std::string& list) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    const std::string tok = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bad scale list '" + list + "'");
    out.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Entries of a --config file become --key=value flags, except where the key
// was already given on the command line.
std::vector<std::string> with_config_entries(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t n = 0; n < args.size(); ++n) {
    if (args[n] == "--config" && n + 1 < args.size()) path = args[n + 1];
    if (args[n].rfind("--config=", 0) == 0) path = args[n].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  auto given = [&](const std::string& flag) {
    for (const std::string& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> out{args.front()};
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty() || item.name.empty() || item.name == "config") continue;
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    for (const std::string& value : item.inputs) out.push_back(flag + "=" + value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided depth super-resolution with a learned affinity graph"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat `key = value` file mirroring the flags");
  };

  // solve
  auto* solve = app.add_subcommand("solve", "upsample one source with its guide");
  std::string guide_path, source_path, source_mask, out_path, graph_path;
  int scale = 0;
  double depth_scale = 1.0;
  ModelFlags model_flags;
  SolveFlags solve_flags;
  solve->add_option("--guide", guide_path, "guide image (PPM/PGM/PFM)")->required();
  solve->add_option("--source", source_path, "low-resolution depth (PGM/PFM)")->required();
  solve->add_option("--source-mask", source_mask, "source validity mask (PGM, 0 = invalid)");
  solve->add_option("--scale", scale, "upsampling factor k")->required()->check(CLI::PositiveNumber);
  solve->add_option("--out", out_path, "output depth (PFM, or 16-bit PGM by extension)")->required();
  solve->add_option("--dump-graph", graph_path, "also write per-pixel total edge weight as PFM");
  solve->add_option("--depth-scale", depth_scale, "multiply loaded depth values by this")->capture_default_str();
  model_flags.add(solve);
  solve_flags.add(solve);
  add_config(solve);

  // dump-graph
  auto* dump = app.add_subcommand("dump-graph", "write the total incident edge weight of every pixel as PFM");
  dump->add_option("--guide", guide_path)->required();
  dump->add_option("--source", source_path)->required();
  dump->add_option("--source-mask", source_mask);
  dump->add_option("--scale", scale)->required()->check(CLI::PositiveNumber);
  dump->add_option("--out", out_path)->required();
  dump->add_option("--depth-scale", depth_scale)->capture_default_str();
  model_flags.add(dump);
  add_config(dump);

  // downsample
  auto* down = app.add_subcommand("downsample", "box-average a depth map into a source");
  std::string depth_path, depth_mask, out_mask;
  down->add_option("--depth", depth_path, "high-resolution depth (PGM/PFM)")->required();
  down->add_option("--mask", depth_mask, "validity mask of the depth map");
  down->add_option("--scale", scale)->required()->check(CLI::PositiveNumber);
  down->add_option("--out", out_path, "source output (invalid pixels are NaN in PFM)")->required();
  down->add_option("--out-mask", out_mask, "also write the source mask as PGM");
  down->add_option("--depth-scale", depth_scale)->capture_default_str();
  add_config(down);

  // eval
  auto* eval = app.add_subcommand("eval", "masked MSE / MAE of a prediction, or of the pipeline over a dataset split");
  std::string pred_path, gt_path, gt_mask, data_root, split = "test", scales = "4,8,16";
  eval->add_option("--pred", pred_path, "prediction to score against --gt");
  eval->add_option("--gt", gt_path, "ground-truth depth");
  eval->add_option("--gt-mask", gt_mask, "ground-truth validity mask");
  eval->add_option("--data", data_root, "dataset root with {split}/{id}.guide.ppm, {id}.depth.pfm");
  eval->add_option("--split", split)->capture_default_str();
  eval->add_option("--scales", scales, "comma-separated upsampling factors")->capture_default_str();
  eval->add_option("--depth-scale", depth_scale)->capture_default_str();
  model_flags.add(eval);
  solve_flags.add(eval);
  add_config(eval);

  // train
  auto* trn = app.add_subcommand("train", "train the feature extractor and affinity scale");
  TrainConfig tc;
  std::string loss_name = "l1", train_features = "learned", params_out, log_path;
  trn->add_option("--data", data_root)->required();
  trn->add_option("--split", split)->capture_default_str();
  trn->add_option("--out", params_out, "parameter file to write")->required();
  trn->add_option("--log", log_path, "also append step records to this file");
  trn->add_option("--scale", tc.scale)->capture_default_str()->check(CLI::PositiveNumber);
  trn->add_option("--lambda", tc.lambda)->capture_default_str();
  trn->add_option("--loss", loss_name)->check(CLI::IsMember({"l1", "mse"}))->capture_default_str();
  trn->add_option("--features", train_features)->check(CLI::IsMember({"colour", "learned"}))->capture_default_str();
  trn->add_option("--lr", tc.learning_rate)->capture_default_str();
  trn->add_option("--lr-decay", tc.lr_decay_factor)->capture_default_str();
  trn->add_option("--lr-decay-every", tc.lr_decay_every_epochs)->capture_default_str();
  trn->add_option("--batch-size", tc.batch_size)->capture_default_str();
  trn->add_option("--epochs", tc.epochs)->capture_default_str();
  trn->add_option("--max-steps", tc.max_steps, "stop after this many optimizer steps (0: none)")->capture_default_str();
  trn->add_option("--clip", tc.clip_norm, "global gradient-norm clip")->capture_default_str();
  trn->add_option("--patch", tc.patch_size, "crop size (0: full images)")->capture_default_str();
  trn->add_flag("--flip,!--no-flip", tc.flip, "random horizontal flips (default on)");
  trn->add_flag("--rotate", tc.rotate, "random rotation in [-15, 15] degrees");
  trn->add_option("--seed", tc.seed)->capture_default_str();
  trn->add_option("--tol", tc.solve.rel_tol)->capture_default_str();
  trn->add_option("--depth-scale", depth_scale)->capture_default_str();
  add_config(trn);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the optimization layer gradients");
  std::uint64_t seed = 0;
  int size = 4;
  double gc_lambda = 0.1, bound = 1e-5;
  gc->add_option("--seed", seed)->capture_default_str();
  gc->add_option("--size", size, "square instance side")->capture_default_str()->check(CLI::PositiveNumber);
  gc->add_option("--scale", scale, "downsampling factor")->check(CLI::PositiveNumber);
  gc->add_option("--lambda", gc_lambda)->capture_default_str();
  gc->add_option("--bound", bound, "maximum allowed relative error")->capture_default_str();
  add_config(gc);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic piecewise-constant dataset split");
  int count = 4;
  synth->add_option("--out", data_root, "dataset root")->required();
  synth->add_option("--split", split)->capture_default_str();
  synth->add_option("--count", count)->capture_default_str();
  synth->add_option("--size", size)->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();

  try {
    const std::vector<std::string> expanded = with_config_entries(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::FileError& e) {
    err << "I/O error: " << e.what() << "\n";
    return io_failure;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return bad_arguments;
  }

  try {
    if (*solve || *dump) {
      warn_unusual_scale(scale, err);
      const GuideImage guide = load_guide(guide_path);
      const SourceImage source = load_depth_scaled(source_path, source_mask, depth_scale);
      const Model model = model_flags.load(guide.channels);
      const Prediction pred = predict(model, guide, source, scale, solve_flags.lambda, solve_flags.options());
      const std::string& graph_out = *dump ? out_path : graph_path;
      if (!graph_out.empty()) {
        DepthImage weight(guide.height, guide.width);
        weight.data = degree(pred.graph);
        save_depth(graph_out, weight);
      }
      if (*solve) {
        save_depth(out_path, pred.target);
        out << fmt("cg_iterations=%d residual=%.6e tolerance=%.6e converged=%d\n", pred.report.iterations,
                   pred.report.final_residual_norm, pred.report.tolerance, pred.report.converged ? 1 : 0);
        if (!pred.report.converged) err << "warning: CG did not reach the requested tolerance\n";
      }
      return ok;
    }

    if (*down) {
      warn_unusual_scale(scale, err);
      const TargetImage depth = load_depth_scaled(depth_path, depth_mask, depth_scale);
      const SourceImage source = downsample(depth, scale);
      save_depth(out_path, source);
      if (!out_mask.empty()) save_mask(out_mask, source.valid, source.height, source.width);
      out << fmt("source=%dx%d valid=%zu\n", source.height, source.width, source.valid_count());
      return ok;
    }

    if (*eval) {
      if (!pred_path.empty() || !gt_path.empty()) {
        if (pred_path.empty() || gt_path.empty()) throw std::invalid_argument("eval needs both --pred and --gt");
        const TargetImage pred = load_depth_scaled(pred_path, "", depth_scale);
        const TargetImage gt = load_depth_scaled(gt_path, gt_mask, depth_scale);
        out << fmt("mse=%.9g mae=%.9g\n", masked_mse(pred, gt), masked_mae(pred, gt));
        return ok;
      }
      if (data_root.empty()) throw std::invalid_argument("eval needs --pred/--gt or --data");
      const std::vector<Sample> samples = load_split(data_root, split, depth_scale);
      if (samples.empty()) throw IoError(IoError::Kind::open_failed, "split '" + split + "' has no samples");
      const Model model = model_flags.load(samples.front().guide.channels);
      for (int k : parse_scales(scales)) {
        warn_unusual_scale(k, err);
        double mse = 0.0, mae = 0.0;
        for (const Sample& s : samples) {
          const SourceImage source = downsample(s.depth, k);
          const Prediction pred = predict(model, s.guide, source, k, solve_flags.lambda, solve_flags.options());
          mse += masked_mse(pred.target, s.depth);
          mae += masked_mae(pred.target, s.depth);
        }
        const double n = static_cast<double>(samples.size());
        out << fmt("scale=%d images=%zu mse=%.9g mae=%.9g\n", k, samples.size(), mse / n, mae / n);
      }
      return ok;
    }

    if (*trn) {
      warn_unusual_scale(tc.scale, err);
      tc.loss = kLossKinds.at(loss_name);
      tc.features = kFeatureModes.at(train_features);
      const std::vector<Sample> samples = load_split(data_root, split, depth_scale);
      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path, std::ios::app);
        if (!log_file) throw IoError(IoError::Kind::write_failed, "cannot open log '" + log_path + "'");
      }
      const TrainResult result = train(tc, samples, [&](const StepRecord& r) {
        const std::string line = format_record(r) + "\n";
        out << line << std::flush;
        if (log_file) log_file << line << std::flush;
      });
      save_params(params_out, result.model.params);
      return ok;
    }

    if (*gc) {
      const int k = scale > 0 ? scale : 2;
      const GradcheckReport r = layer_gradcheck(seed, size, size, k, gc_lambda);
      out << fmt("edges=%.3e raw_mu=%.3e source=%.3e max=%.3e bound=%.1e\n", r.max_rel_error_edges,
                 r.max_rel_error_raw_mu, r.max_rel_error_source, r.max_rel_error(), bound);
      if (!r.passed(bound)) {
        err << "gradcheck failed\n";
        return gradcheck_failure;
      }
      return ok;
    }

    if (*synth) {
      for (const Sample& s : make_synthetic_set(count, size, seed)) save_sample(data_root + "/" + split, s);
      out << "wrote " << count << " samples to " << data_root << "/" << split << "\n";
      return ok;
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return io_failure;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return numerical_failure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return bad_arguments;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return bad_arguments;
  } catch (const std::length_error& e) {
    err << "error: " << e.what() << "\n";
    return bad_arguments;
  }
  return bad_arguments;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gsr::cli
