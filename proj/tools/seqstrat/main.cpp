#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqstrat/coreset.hpp"
#include "seqstrat/error.hpp"
#include "seqstrat/io.hpp"
#include "seqstrat/manifest.hpp"
#include "seqstrat/metrics.hpp"
#include "seqstrat/pool.hpp"
#include "seqstrat/segmentation.hpp"
#include "seqstrat/stratify.hpp"
#include "seqstrat/version.hpp"

namespace {

using seqstrat::Json;

bool g_verbose = false;

void log_info(const std::string& message) {
  if (g_verbose) std::cerr << "[seqstrat] " << message << "\n";
}

void log_warn(const std::string& message) {
  std::cerr << "[seqstrat] warning: " << message << "\n";
}

// Provenance embeds only result-determining configuration: output paths and
// execution knobs (--jobs, --verbose) stay out so reruns are byte-identical.
Json make_provenance(const std::string& subcommand, Json config) {
  Json provenance = Json::object();
  provenance["tool"] = seqstrat::kToolName;
  provenance["version"] = seqstrat::kVersion;
  provenance["subcommand"] = subcommand;
  provenance["config"] = std::move(config);
  return provenance;
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> ratios;
  std::istringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      std::size_t used = 0;
      ratios.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (...) {
      seqstrat::fail("invalid ratio '", token, "' in '", text, "'");
    }
  }
  seqstrat::require(!ratios.empty(), "no ratios given");
  return ratios;
}

std::vector<std::string> parse_csv(const std::string& text) {
  std::vector<std::string> items;
  std::istringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ','))
    if (!token.empty()) items.push_back(token);
  return items;
}

std::map<std::string, double> parse_weights(const std::string& text) {
  std::map<std::string, double> weights;
  for (const std::string& item : parse_csv(text)) {
    const auto eq = item.find('=');
    seqstrat::require(eq != std::string::npos, "weight '", item,
                      "' must look like name=value");
    const std::string name = item.substr(0, eq);
    try {
      weights[name] = std::stod(item.substr(eq + 1));
    } catch (...) {
      seqstrat::fail("invalid weight value in '", item, "'");
    }
  }
  return weights;
}

seqstrat::SubsetSpec make_spec(const std::string& ratios, const std::string& names) {
  seqstrat::SubsetSpec spec;
  spec.ratios = parse_ratios(ratios);
  if (!names.empty()) spec.names = parse_csv(names);
  spec.validate();
  return spec;
}

struct ManifestPools {
  std::vector<seqstrat::Vec3> positions;
  std::vector<std::uint32_t> labeled;
  std::vector<std::uint32_t> unlabeled;
};

ManifestPools split_pools(const seqstrat::DatasetManifest& manifest,
                          const std::string& labeled_arg) {
  ManifestPools pools;
  pools.positions.reserve(manifest.scans.size());
  for (const auto& scan : manifest.scans) pools.positions.push_back(scan.position);

  std::set<std::uint32_t> labeled;
  if (!labeled_arg.empty())
    for (const std::uint32_t id : seqstrat::parse_id_list_arg(labeled_arg)) {
      seqstrat::require(id < manifest.scans.size(), "labeled scan id ", id,
                        " is out of range (manifest has ", manifest.scans.size(),
                        " scans)");
      labeled.insert(id);
    }
  for (std::uint32_t id = 0; id < manifest.scans.size(); ++id)
    (labeled.count(id) ? pools.labeled : pools.unlabeled).push_back(id);
  return pools;
}

void add_ingest(CLI::App& app) {
  auto* cmd = app.add_subcommand("ingest", "Parse a KITTI-style dataset into a manifest");
  auto root = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto label_map = std::make_shared<std::string>();
  auto scale = std::make_shared<double>(1.0);
  auto bins = std::make_shared<std::uint32_t>(256);
  auto jobs = std::make_shared<unsigned>(0);
  cmd->add_option("--root", *root, "Dataset root with <sequence>/ directories")->required();
  cmd->add_option("--out", *out, "Manifest output path")->required();
  cmd->add_option("--label-map", *label_map, "Label remap file");
  cmd->add_option("--intensity-scale", *scale, "Multiply intensities before clamping");
  cmd->add_option("--bins", *bins, "Intensity histogram bins");
  cmd->add_option("--jobs", *jobs, "Worker threads (0 = all cores)")
      ->envname("SEQSTRAT_JOBS");

  cmd->callback([=] {
    seqstrat::IngestOptions options;
    options.intensity_scale = *scale;
    options.bins = *bins;
    options.jobs = *jobs;
    if (!label_map->empty()) options.label_map = seqstrat::read_label_map(*label_map);
    const seqstrat::DatasetManifest manifest = seqstrat::ingest_dataset(*root, options);
    Json config = Json::object();
    config["root"] = *root;
    config["label_map"] = *label_map;
    config["intensity_scale"] = *scale;
    config["bins"] = *bins;
    seqstrat::write_manifest(*out, manifest, make_provenance("ingest", std::move(config)));
    log_info("ingested " + std::to_string(manifest.scans.size()) + " scans into " + *out);
  });
}

void add_segment(CLI::App& app) {
  auto* cmd = app.add_subcommand("segment", "Group consecutive scans into segments");
  auto manifest_path = std::make_shared<std::string>();
  auto granularity = std::make_shared<std::string>();
  auto remainder = std::make_shared<std::string>("keep");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--manifest", *manifest_path, "Manifest path")->required();
  cmd->add_option("--granularity", *granularity, "Scans per segment, or 'sequence'")
      ->required();
  cmd->add_option("--remainder", *remainder, "Trailing remainder policy: keep|merge")
      ->check(CLI::IsMember({"keep", "merge"}));
  cmd->add_option("--out", *out, "Segment table output path")->required();

  cmd->callback([=] {
    const auto file = seqstrat::read_manifest(*manifest_path);
    const auto g = seqstrat::Granularity::parse(*granularity);
    const auto policy = *remainder == "merge" ? seqstrat::RemainderPolicy::Merge
                                              : seqstrat::RemainderPolicy::Keep;
    const auto segments = seqstrat::segment_manifest(file.manifest, g, policy);
    Json config = Json::object();
    config["manifest"] = *manifest_path;
    config["granularity"] = g.str();
    config["remainder"] = *remainder;
    seqstrat::write_segments(*out, segments, g.str(), file.manifest.intensity_bins,
                             make_provenance("segment", std::move(config)));
    log_info("wrote " + std::to_string(segments.size()) + " segments to " + *out);
  });
}

void add_split(CLI::App& app) {
  auto* cmd = app.add_subcommand("split", "Assign segments to subsets");
  auto segments_path = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>();
  auto ratios = std::make_shared<std::string>();
  auto names = std::make_shared<std::string>();
  auto seed = std::make_shared<std::uint64_t>();
  auto tie_break = std::make_shared<std::string>("uniform");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--segments", *segments_path, "Segment table path")->required();
  cmd->add_option("--method", *method, "random|msss|msegsss")
      ->required()
      ->check(CLI::IsMember({"random", "msss", "msegsss"}));
  cmd->add_option("--ratios", *ratios, "Subset ratios, e.g. 0.7,0.1,0.2")->required();
  cmd->add_option("--names", *names, "Subset names, e.g. train,val,test");
  cmd->add_option("--seed", *seed, "PRNG seed")->required();
  cmd->add_option("--tie-break", *tie_break, "Label tie-break: uniform|sequence")
      ->check(CLI::IsMember({"uniform", "sequence"}));
  cmd->add_option("--out", *out, "Split output path")->required();

  cmd->callback([=] {
    const auto file = seqstrat::read_segments(*segments_path);
    const auto spec = make_spec(*ratios, *names);
    auto assignment = seqstrat::stratify_with_method(
        file.segments, spec, *seed, *method, seqstrat::tie_break_from_string(*tie_break));
    assignment.granularity = file.granularity;
    Json config = Json::object();
    config["segments"] = *segments_path;
    config["method"] = *method;
    config["ratios"] = spec.ratios;
    config["names"] = spec.names;
    config["seed"] = *seed;
    config["tie_break"] = *tie_break;
    seqstrat::write_assignment(*out, assignment, make_provenance("split", std::move(config)));
    log_info("wrote split to " + *out);
  });
}

void add_evaluate(CLI::App& app) {
  auto* cmd = app.add_subcommand("evaluate", "Score a split with all metrics");
  auto split_path = std::make_shared<std::string>();
  auto segments_path = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("containment");
  auto ids_mode = std::make_shared<std::string>("pairwise");
  auto smoothing = std::make_shared<double>(1.0);
  auto out = std::make_shared<std::string>();
  cmd->add_option("--split", *split_path, "Split path")->required();
  cmd->add_option("--segments", *segments_path, "Segment table path")->required();
  cmd->add_option("--mode", *mode, "LD/IFWLD mass mode: containment|points")
      ->check(CLI::IsMember({"containment", "points"}));
  cmd->add_option("--ids-mode", *ids_mode, "IDS mode: pairwise|dataset")
      ->check(CLI::IsMember({"pairwise", "dataset"}));
  cmd->add_option("--kl-smoothing", *smoothing, "Points added per class before KL");
  cmd->add_option("--out", *out, "Report output path (stdout when omitted)");

  cmd->callback([=] {
    const auto segments_file = seqstrat::read_segments(*segments_path);
    const auto assignment = seqstrat::read_assignment(*split_path);
    seqstrat::EvaluateOptions options;
    options.mass_mode = seqstrat::mass_mode_from_string(*mode);
    options.ids_mode = *ids_mode == "dataset" ? seqstrat::IdsMode::VsDataset
                                              : seqstrat::IdsMode::PairwiseMean;
    options.kl_smoothing_points = *smoothing;
    const auto report = seqstrat::evaluate_split(assignment, segments_file.segments, options);
    Json config = Json::object();
    config["split"] = *split_path;
    config["segments"] = *segments_path;
    config["mode"] = *mode;
    config["ids_mode"] = *ids_mode;
    config["kl_smoothing"] = *smoothing;
    const std::string serialized =
        seqstrat::serialize_report(report, make_provenance("evaluate", std::move(config)));
    if (out->empty())
      std::cout << serialized;
    else
      seqstrat::atomic_write_file(*out, serialized);
  });
}

void add_rank(CLI::App& app) {
  auto* cmd = app.add_subcommand("rank", "Generate, score and rank a pool of splits");
  auto segments_path = std::make_shared<std::string>();
  auto methods = std::make_shared<std::string>("msss,msegsss,random");
  auto n = std::make_shared<std::uint32_t>(1);
  auto ratios = std::make_shared<std::string>();
  auto names = std::make_shared<std::string>();
  auto weights = std::make_shared<std::string>();
  auto seed_base = std::make_shared<std::uint64_t>();
  auto tie_break = std::make_shared<std::string>("uniform");
  auto frozen_test = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("containment");
  auto jobs = std::make_shared<unsigned>(0);
  auto out = std::make_shared<std::string>();
  auto winner_out = std::make_shared<std::string>();
  cmd->add_option("--segments", *segments_path, "Segment table path")->required();
  cmd->add_option("--methods", *methods, "Comma list of random|msss|msegsss");
  cmd->add_option("--n", *n, "Seeds per method")->required();
  cmd->add_option("--ratios", *ratios, "Subset ratios")->required();
  cmd->add_option("--names", *names, "Subset names");
  cmd->add_option("--weights", *weights, "Objective weights, e.g. ld=1,ifwld=1,ids=1,ed=1");
  cmd->add_option("--seed-base", *seed_base, "First seed; methods use base..base+n-1")
      ->required();
  cmd->add_option("--tie-break", *tie_break, "Label tie-break: uniform|sequence")
      ->check(CLI::IsMember({"uniform", "sequence"}));
  cmd->add_option("--frozen-test", *frozen_test,
                  "Comma list of sequences excluded from the pool (held-out test)");
  cmd->add_option("--mode", *mode, "LD/IFWLD mass mode: containment|points")
      ->check(CLI::IsMember({"containment", "points"}));
  cmd->add_option("--jobs", *jobs, "Worker threads (0 = all cores)")
      ->envname("SEQSTRAT_JOBS");
  cmd->add_option("--out", *out, "Ranked pool output path")->required();
  cmd->add_option("--winner-out", *winner_out, "Winning split output path");

  cmd->callback([=] {
    const auto file = seqstrat::read_segments(*segments_path);

    std::vector<seqstrat::Segment> pool_segments;
    std::vector<std::string> frozen = parse_csv(*frozen_test);
    if (frozen.empty()) {
      pool_segments = file.segments;
    } else {
      std::set<std::string> frozen_set(frozen.begin(), frozen.end());
      std::set<std::string> seen;
      for (const auto& segment : file.segments) {
        seen.insert(segment.sequence_id);
        if (!frozen_set.count(segment.sequence_id)) pool_segments.push_back(segment);
      }
      for (const auto& sequence : frozen_set)
        seqstrat::require(seen.count(sequence), "frozen test sequence '", sequence,
                          "' does not appear in the segment table");
      seqstrat::require(!pool_segments.empty(),
                        "all segments are frozen; nothing left to split");
    }

    seqstrat::PoolConfig config;
    config.methods = parse_csv(*methods);
    config.seeds_per_method = *n;
    config.seed_base = *seed_base;
    config.spec = make_spec(*ratios, *names);
    config.granularity = file.granularity;
    config.weights = weights->empty() ? seqstrat::PoolConfig::default_weights()
                                      : parse_weights(*weights);
    config.tie_break = seqstrat::tie_break_from_string(*tie_break);
    config.evaluate.mass_mode = seqstrat::mass_mode_from_string(*mode);

    const seqstrat::RankedPool pool = seqstrat::generate_pool(pool_segments, config, *jobs);
    if (pool.degenerate) log_warn("degenerate pool: all generated splits are identical");

    Json cfg = Json::object();
    cfg["segments"] = *segments_path;
    cfg["methods"] = config.methods;
    cfg["n"] = *n;
    cfg["ratios"] = config.spec.ratios;
    cfg["names"] = config.spec.names;
    cfg["weights"] = config.weights;
    cfg["seed_base"] = *seed_base;
    cfg["tie_break"] = *tie_break;
    cfg["frozen_test"] = frozen;
    cfg["mode"] = *mode;
    const Json provenance = make_provenance("rank", cfg);
    seqstrat::write_pool(*out, pool, provenance);
    if (!winner_out->empty())
      seqstrat::write_assignment(*winner_out, seqstrat::select_best(pool), provenance);
    log_info("ranked " + std::to_string(pool.entries.size()) + " splits into " + *out);
  });
}

void add_coreset(CLI::App& app) {
  auto* cmd = app.add_subcommand("coreset", "Plan an ego-pose distance coreset");
  auto manifest_path = std::make_shared<std::string>();
  auto labeled = std::make_shared<std::string>();
  auto budget = std::make_shared<std::uint64_t>();
  auto alpha = std::make_shared<double>(0.9);
  auto halving = std::make_shared<bool>(false);
  auto dim = std::make_shared<unsigned>(3);
  auto seed = std::make_shared<std::uint64_t>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--manifest", *manifest_path, "Manifest path")->required();
  cmd->add_option("--labeled", *labeled, "Labeled scan ids: comma list or @file");
  cmd->add_option("--budget", *budget, "Number of scans to select")->required();
  cmd->add_option("--alpha", *alpha, "Radius decay factor in (0,1)");
  cmd->add_flag("--halving", *halving, "Halve the radius instead of decaying by alpha");
  cmd->add_option("--dim", *dim, "Distance dimensionality: 2 (ground plane) or 3")
      ->check(CLI::IsMember({2u, 3u}));
  cmd->add_option("--seed", *seed, "PRNG seed")->required();
  cmd->add_option("--out", *out, "Coreset plan output path")->required();

  cmd->callback([=] {
    const auto file = seqstrat::read_manifest(*manifest_path);
    const ManifestPools pools = split_pools(file.manifest, *labeled);
    seqstrat::CoresetParams params;
    params.alpha = *alpha;
    params.halving = *halving;
    params.ground_plane = *dim == 2;
    const seqstrat::CoresetPlan plan = seqstrat::ego_pose_sample(
        pools.positions, pools.labeled, pools.unlabeled, *budget, *seed, params);
    Json config = Json::object();
    config["manifest"] = *manifest_path;
    config["labeled"] = *labeled;
    config["budget"] = *budget;
    config["alpha"] = *alpha;
    config["halving"] = *halving;
    config["dim"] = *dim;
    config["seed"] = *seed;
    seqstrat::write_coreset_plan(*out, plan, file.manifest,
                                 make_provenance("coreset", std::move(config)));
    log_info("planned " + std::to_string(plan.picks.size()) + " picks into " + *out);
  });
}

void add_al_plan(CLI::App& app) {
  auto* cmd = app.add_subcommand("al-plan", "Plan active-learning query rounds");
  auto manifest_path = std::make_shared<std::string>();
  auto labeled = std::make_shared<std::string>();
  auto steps = std::make_shared<std::size_t>(1);
  auto budget = std::make_shared<std::size_t>();
  auto strategy = std::make_shared<std::string>();
  auto scores_path = std::make_shared<std::string>();
  auto subsample = std::make_shared<std::string>();
  auto m = std::make_shared<std::size_t>(0);
  auto alpha = std::make_shared<double>(0.9);
  auto dim = std::make_shared<unsigned>(3);
  auto seed = std::make_shared<std::uint64_t>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--manifest", *manifest_path, "Manifest path")->required();
  cmd->add_option("--labeled", *labeled, "Labeled scan ids: comma list or @file");
  cmd->add_option("--steps", *steps, "Query rounds")->required();
  cmd->add_option("--budget", *budget, "Scans per round")->required();
  cmd->add_option("--strategy", *strategy, "random|distance|score")
      ->required()
      ->check(CLI::IsMember({"random", "distance", "score"}));
  cmd->add_option("--scores", *scores_path, "Score file (scan_id score per line)");
  cmd->add_option("--subsample", *subsample, "Pool sub-sampler: rss|dss")
      ->check(CLI::IsMember({"rss", "dss"}));
  cmd->add_option("--m", *m, "Sub-sampled pool size");
  cmd->add_option("--alpha", *alpha, "Radius decay factor in (0,1)");
  cmd->add_option("--dim", *dim, "Distance dimensionality: 2 or 3")
      ->check(CLI::IsMember({2u, 3u}));
  cmd->add_option("--seed", *seed, "PRNG seed")->required();
  cmd->add_option("--out", *out, "AL plan output path")->required();

  cmd->callback([=] {
    const auto file = seqstrat::read_manifest(*manifest_path);
    const ManifestPools pools = split_pools(file.manifest, *labeled);

    seqstrat::AlPlanConfig config;
    config.steps = *steps;
    config.budget_per_step = *budget;
    config.strategy = seqstrat::query_strategy_from_string(*strategy);
    config.seed = *seed;
    config.params.alpha = *alpha;
    config.params.ground_plane = *dim == 2;
    if (!subsample->empty()) {
      seqstrat::require(*m > 0, "--subsample needs --m");
      config.subsample = *subsample == "rss" ? seqstrat::SubsampleStrategy::RSS
                                             : seqstrat::SubsampleStrategy::DSS;
      config.subsample_size = *m;
    }

    std::map<std::uint32_t, double> scores;
    if (config.strategy == seqstrat::QueryStrategy::Score) {
      seqstrat::require(!scores_path->empty(), "score strategy needs --scores");
      scores = seqstrat::read_scores_file(*scores_path);
    }

    const auto plan = seqstrat::al_plan(pools.positions, pools.labeled, pools.unlabeled,
                                        config, scores.empty() ? nullptr : &scores);
    Json cfg = Json::object();
    cfg["manifest"] = *manifest_path;
    cfg["labeled"] = *labeled;
    cfg["steps"] = *steps;
    cfg["budget"] = *budget;
    cfg["strategy"] = *strategy;
    cfg["scores"] = *scores_path;
    cfg["subsample"] = *subsample;
    cfg["m"] = *m;
    cfg["alpha"] = *alpha;
    cfg["dim"] = *dim;
    cfg["seed"] = *seed;
    seqstrat::write_al_plan(*out, plan, make_provenance("al-plan", std::move(cfg)));
    log_info("planned " + std::to_string(plan.size()) + " query rounds into " + *out);
  });
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential dataset split generation, split metrics and "
               "ego-pose coreset planning for LiDAR scan datasets"};
  app.set_version_flag("--version", seqstrat::kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from an INI file");
  app.add_flag("--verbose,-v", g_verbose, "Log progress to stderr");

  add_ingest(app);
  add_segment(app);
  add_split(app);
  add_evaluate(app);
  add_rank(app);
  add_coreset(app);
  add_al_plan(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2; // usage error
  } catch (const seqstrat::error& e) {
    Json record = Json::object();
    record["error"] = Json::object();
    record["error"]["type"] = "domain";
    record["error"]["message"] = e.what();
    std::cerr << record.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    Json record = Json::object();
    record["error"] = Json::object();
    record["error"]["type"] = "internal";
    record["error"]["message"] = e.what();
    std::cerr << record.dump() << "\n";
    return 1;
  }
  return 0;
}
