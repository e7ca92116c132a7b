#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sgldreg/config.hpp"
#include "sgldreg/dataset.hpp"
#include "sgldreg/error.hpp"
#include "sgldreg/experiments.hpp"
#include "sgldreg/posterior.hpp"
#include "sgldreg/training.hpp"
#include "sgldreg/volume_io.hpp"

namespace sgldreg::cli {

namespace fs = std::filesystem;

namespace {

// Runs `body`, translating exceptions into exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::invalid_argument& e) {  // ConfigError, ShapeError and plain precondition failures
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

DatasetManifest manifest_for(const std::optional<fs::path>& manifest, const std::optional<fs::path>& config) {
  if (manifest) return read_manifest(*manifest);
  if (config) {
    const RunConfig rc = load_run_config(*config);
    if (rc.manifest.empty()) throw ConfigError("config has no data.manifest");
    return read_manifest(rc.manifest);
  }
  throw ConfigError("need --manifest or a --config with data.manifest");
}

double mean_abs_displacement(const VectorField& u) {
  double total = 0.0;
  for (std::size_t p = 0; p < u.voxel_count(); ++p) {
    double s = 0.0;
    for (std::size_t d = 0; d < u.dims(); ++d) s += u.at(d, p) * u.at(d, p);
    total += std::sqrt(s);
  }
  return total / static_cast<double>(u.voxel_count());
}

}  // namespace

int cmd_train(const TrainOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig rc = load_run_config(o.config);
    if (o.seed) rc.training.seed = *o.seed;
    if (o.out) rc.output_dir = *o.out;
    if (rc.manifest.empty()) throw ConfigError("config has no data.manifest");
    const DatasetManifest manifest = read_manifest(rc.manifest);
    TrainingData data;
    data.train = images_of(load_split(manifest, "train"));
    data.validation = images_of(load_split(manifest, "validation"));
    if (data.train.empty()) throw ConfigError("manifest has no training pairs");
    log << "training on " << data.train.size() << " pairs (" << data.validation.size() << " validation), N = "
        << rc.training.iterations << ", t_b = " << rc.training.burn_in_iteration() << '\n';

    const std::size_t report = std::max<std::size_t>(1, rc.training.iterations / 20);
    const TrainingResult result = train(data, rc.training, [&](const LossRecord& r) {
      if (!o.quiet && ((r.iteration + 1) % report == 0)) {
        log << "  iter " << r.iteration + 1 << "  train " << fmt(r.train_loss);
        if (std::isfinite(r.val_loss)) log << "  val " << fmt(r.val_loss);
        log << '\n';
      }
    });
    for (const auto& reason : result.schedule_report.reasons) log << "schedule: " << reason << '\n';

    const fs::path store_dir = rc.output_dir / "store";
    if (fs::exists(store_dir)) fs::remove_all(store_dir);
    SnapshotStore store = result.store;
    save_store(store_dir, store);
    auto csv = open_csv(rc.output_dir / "loss_curve.csv");
    write_loss_curve(csv, result.curve);
    log << "initial validation loss " << fmt(result.initial_validation_loss) << ", final "
        << fmt(result.store.snapshots.back().validation_loss) << '\n'
        << "wrote " << store.size() << " snapshots to " << store_dir.string() << '\n';
    return int{kSuccess};
  });
}

int cmd_register(const RegisterOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig rc;
    if (o.config) rc = load_run_config(*o.config);
    const SnapshotStore store = load_store(o.store);
    const Volume moving = load_volume(o.moving);
    const Volume fixed = load_volume(o.fixed);
    if (moving.grid() != fixed.grid()) {
      throw ShapeError("moving " + to_string(moving.grid()) + " and fixed " + to_string(fixed.grid()) +
                       " differ in shape");
    }
    if (store.size() < 2) {
      err << "warning: store holds " << store.size()
          << " snapshot; the posterior has no spread and the uncertainty map sits at its floor\n";
    }
    const RegistrationResult reg = register_images(moving, fixed, store, rc.uncertainty);
    fs::create_directories(o.out);
    save_volume(o.out / "registered.vol", reg.registered);
    save_vector_field(o.out / "deformation.vol", reg.deformation);
    save_vector_field(o.out / "variance.vol", reg.summary.variance);
    save_vector_field(o.out / "uncertainty.vol", reg.summary.uncertainty);
    if (o.pgm && moving.spatial_rank() == 2) {
      save_pgm(o.out / "registered.pgm", reg.registered.tensor());
      save_pgm(o.out / "uncertainty.pgm", reg.summary.uncertainty.tensor());
    }
    const double mag = mean_abs_displacement(reg.deformation);
    double h = 0.0;
    for (double v : reg.summary.uncertainty.tensor().values()) h += v;
    h /= static_cast<double>(reg.summary.uncertainty.tensor().size());
    log << "mean |u| " << fmt(mag) << " voxels ("
        << (mag < rc.identity_threshold ? "below" : "above") << " identity threshold "
        << fmt(rc.identity_threshold) << ")\n"
        << "mean uncertainty " << fmt(h) << '\n'
        << "wrote registered.vol, deformation.vol, variance.vol, uncertainty.vol to " << o.out.string() << '\n';
    return int{kSuccess};
  });
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const DatasetManifest manifest = manifest_for(o.manifest, o.config);
    const SnapshotStore store = load_store(o.store);
    const auto pairs = load_split(manifest, o.split);
    if (pairs.empty()) throw ConfigError("manifest has no '" + o.split + "' pairs");
    std::optional<std::vector<double>> baseline;
    if (o.baseline_csv) {
      std::ifstream in(*o.baseline_csv);
      if (!in) throw ConfigError("cannot read baseline '" + o.baseline_csv->string() + "'");
      baseline = read_baseline_dice(in);
    }
    std::vector<EvaluationRow> rows;
    for (const auto& p : pairs) {
      auto r = evaluate_pair(p, store);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    auto csv = open_csv(o.out);
    write_evaluation_csv(csv, rows, baseline ? &*baseline : nullptr);
    double before = 0.0, after = 0.0, folds = 0.0;
    const auto scores = pair_scores(rows);
    for (const auto& s : scores) {
      before += s.dice_before;
      after += s.dice_after;
      folds += s.fold_pct;
    }
    const double n = static_cast<double>(scores.size());
    log << "evaluated " << scores.size() << " pairs: dice " << fmt(before / n) << " -> " << fmt(after / n)
        << ", folds " << fmt(folds / n) << "%\n";
    return int{kSuccess};
  });
}

int cmd_uncertainty(const UncertaintyOptionsCli& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (o.sigmas.size() < 2) throw ConfigError("need at least two --sigma values to correlate");
    UncertaintyOptions uopts;
    if (o.config) uopts = load_run_config(*o.config).uncertainty;
    const DatasetManifest manifest = manifest_for(o.manifest, o.config);
    const SnapshotStore store = load_store(o.store);
    auto pairs = images_of(load_split(manifest, o.split));
    if (pairs.empty()) throw ConfigError("manifest has no '" + o.split + "' pairs");
    if (o.max_pairs && pairs.size() > o.max_pairs) pairs.resize(o.max_pairs);

    const NoiseExperimentResult res = uncertainty_noise_experiment(store, pairs, o.sigmas, o.seed, uopts);
    auto csv = open_csv(o.out);
    csv << "sigma,mean_uncertainty\n";
    for (std::size_t i = 0; i < res.sigmas.size(); ++i) {
      csv << fmt(res.sigmas[i]) << ',' << fmt(res.mean_uncertainty[i]) << '\n';
    }
    csv << "# pearson_r," << (res.degenerate ? std::string("nan") : fmt(res.r)) << '\n';

    fs::path scatter = o.out;
    scatter.replace_filename(o.out.stem().string() + "_scatter.csv");
    auto sc = open_csv(scatter);
    sc << "sigma,pair_index,mean_uncertainty\n";
    for (std::size_t i = 0; i < res.sigmas.size(); ++i) {
      for (std::size_t p = 0; p < res.per_pair[i].size(); ++p) {
        sc << fmt(res.sigmas[i]) << ',' << p << ',' << fmt(res.per_pair[i][p]) << '\n';
      }
    }
    if (res.degenerate) {
      err << "warning: mean uncertainty does not vary with sigma (posterior spread at floor); "
             "correlation is undefined and the result is low-confidence\n";
    }
    log << "pearson r = " << (res.degenerate ? std::string("nan") : fmt(res.r)) << " over " << res.sigmas.size()
        << " noise levels, " << pairs.size() << " pairs\n";
    return int{kSuccess};
  });
}

int cmd_generate(const GenerateOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    SyntheticSpec spec;
    spec.grid = o.grid;
    spec.family = parse_shape_family(o.family);
    spec.labels = o.labels;
    spec.max_displacement = o.max_displacement;
    spec.smoothness = o.smoothness;
    spec.seed = o.seed;
    const DatasetManifest m = write_synthetic_dataset(o.out, o.count, spec, o.seed);
    log << "wrote " << m.entries.size() << " pairs and manifest.txt to " << o.out.string() << '\n';
    return int{kSuccess};
  });
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Diffeomorphic registration with Langevin-sampled posterior"};
  app.require_subcommand(1);

  TrainOptions train_o;
  std::string train_out;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train and write the snapshot store and loss curve");
  train->add_option("--config", train_o.config, "Run configuration (INI)")->required();
  auto* train_out_opt = train->add_option("--out", train_out, "Output directory (overrides data.output_dir)");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "Seed override");
  train->add_flag("--quiet", train_o.quiet, "Only print the summary");

  RegisterOptions reg_o;
  std::string reg_config;
  auto* reg = app.add_subcommand("register", "Register a moving volume onto a fixed volume");
  reg->add_option("--store", reg_o.store, "Snapshot store directory")->required();
  reg->add_option("--moving", reg_o.moving, "Moving volume file")->required();
  reg->add_option("--fixed", reg_o.fixed, "Fixed volume file")->required();
  reg->add_option("--out", reg_o.out, "Output directory")->required();
  auto* reg_config_opt = reg->add_option("--config", reg_config, "Run configuration for posterior options");
  reg->add_flag("--pgm", reg_o.pgm, "Also write PGM renders for 2D inputs");

  EvaluateOptions eval_o;
  std::string eval_config, eval_manifest, eval_baseline;
  auto* eval = app.add_subcommand("evaluate", "Dice and fold percentage on a dataset split");
  eval->add_option("--store", eval_o.store, "Snapshot store directory")->required();
  auto* eval_config_opt = eval->add_option("--config", eval_config, "Run configuration naming the manifest");
  auto* eval_manifest_opt = eval->add_option("--manifest", eval_manifest, "Dataset manifest");
  eval->add_option("--out", eval_o.out, "Output CSV")->required();
  auto* eval_baseline_opt = eval->add_option("--baseline-csv", eval_baseline, "Evaluation CSV of a baseline");
  eval->add_option("--split", eval_o.split, "Split to evaluate")->capture_default_str();

  UncertaintyOptionsCli unc_o;
  std::string unc_config, unc_manifest;
  auto* unc = app.add_subcommand("uncertainty", "Correlate mean uncertainty with input noise level");
  unc->add_option("--store", unc_o.store, "Snapshot store directory")->required();
  auto* unc_config_opt = unc->add_option("--config", unc_config, "Run configuration naming the manifest");
  auto* unc_manifest_opt = unc->add_option("--manifest", unc_manifest, "Dataset manifest");
  unc->add_option("--out", unc_o.out, "Output CSV")->required();
  unc->add_option("--sigma", unc_o.sigmas, "Noise std (repeat for each level)")->required();
  unc->add_option("--seed", unc_o.seed, "Noise seed")->capture_default_str();
  unc->add_option("--split", unc_o.split, "Split to use")->capture_default_str();
  unc->add_option("--max-pairs", unc_o.max_pairs, "Use at most this many pairs (0 = all)");

  GenerateOptions gen_o;
  std::string grid_text = "64,64";
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with manifest");
  gen->add_option("--out", gen_o.out, "Output directory")->required();
  gen->add_option("--count", gen_o.count, "Number of pairs")->capture_default_str();
  gen->add_option("--seed", gen_o.seed, "Seed")->capture_default_str();
  gen->add_option("--family", gen_o.family, "blobs, rings or phantom")->capture_default_str();
  gen->add_option("--grid", grid_text, "Comma-separated extents")->capture_default_str();
  gen->add_option("--labels", gen_o.labels, "Labels per image")->capture_default_str();
  gen->add_option("--max-displacement", gen_o.max_displacement, "Peak velocity magnitude")->capture_default_str();
  gen->add_option("--smoothness", gen_o.smoothness, "Velocity smoothing std")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    log << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  if (*train) {
    if (*train_out_opt) train_o.out = train_out;
    if (*train_seed_opt) train_o.seed = train_seed;
    return cmd_train(train_o, log, err);
  }
  if (*reg) {
    if (*reg_config_opt) reg_o.config = reg_config;
    return cmd_register(reg_o, log, err);
  }
  if (*eval) {
    if (*eval_config_opt) eval_o.config = eval_config;
    if (*eval_manifest_opt) eval_o.manifest = eval_manifest;
    if (*eval_baseline_opt) eval_o.baseline_csv = eval_baseline;
    return cmd_evaluate(eval_o, log, err);
  }
  if (*unc) {
    if (*unc_config_opt) unc_o.config = unc_config;
    if (*unc_manifest_opt) unc_o.manifest = unc_manifest;
    return cmd_uncertainty(unc_o, log, err);
  }
  if (*gen) {
    try {
      gen_o.grid.clear();
      std::stringstream ss(grid_text);
      std::string item;
      while (std::getline(ss, item, ',')) gen_o.grid.push_back(std::stoul(item));
    } catch (const std::exception&) {
      err << "usage error: --grid expects comma-separated extents\n";
      return kUsage;
    }
    return cmd_generate(gen_o, log, err);
  }
  return kUsage;
}

}  // namespace sgldreg::cli
