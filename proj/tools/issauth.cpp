// issauth: enroll, verify, inspect keypoints, evaluate pair sets.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "issauth/issauth.hpp"

namespace {

using namespace issauth;

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitError = 2;

// Scan-processing failures are domain outcomes; everything else is an
// environment or usage problem.
int exit_code_for(Errc code) {
  switch (code) {
    case Errc::degenerate_geometry:
    case Errc::insufficient_structure:
    case Errc::isolated_keypoint:
    case Errc::too_few_keypoints:
    case Errc::insufficient_pairs:
      return kExitReject;
    default:
      return kExitError;
  }
}

/// Parameter flags shared by every subcommand. Values start at the library
/// defaults; only flags given on the command line override the profile.
struct ParamFlags {
  std::string profile = "kp2";
  PipelineConfig values;
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> overrides;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T PipelineConfig::*group, auto member, const std::string& help) {
    auto* field = &((values.*group).*member);
    CLI::Option* opt = app->add_option("--" + name, *field, help)->capture_default_str();
    overrides.emplace_back(opt, [field, group, member](PipelineConfig& c) { (c.*group).*member = *field; });
  }

  void attach(CLI::App* app) {
    app->add_option("--profile", profile, "dense | kp2 | kp1")
        ->envname("ISSAUTH_PROFILE")
        ->check(CLI::IsMember({"dense", "kp2", "kp1"}))
        ->capture_default_str();
    add(app, "voxel_size", &PipelineConfig::preprocess, &PreprocessParams::voxel_size, "voxel edge (m)");
    add(app, "normal_neighbors", &PipelineConfig::preprocess, &PreprocessParams::normal_neighbors, "normal k");
    add(app, "normal_radius", &PipelineConfig::preprocess, &PreprocessParams::normal_radius, "normal radius (m)");
    add(app, "outlier_radius", &PipelineConfig::preprocess, &PreprocessParams::outlier_radius, "outlier radius (m)");
    add(app, "outlier_min_neighbors", &PipelineConfig::preprocess, &PreprocessParams::outlier_min_neighbors,
        "neighbors required to keep a point");
    add(app, "salient_radius", &PipelineConfig::iss, &IssParams::salient_radius, "ISS salient radius (m)");
    add(app, "non_max_radius", &PipelineConfig::iss, &IssParams::non_max_radius,
        "ISS suppression radius (m); the profile sets it otherwise");
    add(app, "gamma_21", &PipelineConfig::iss, &IssParams::gamma_21, "lambda2/lambda1 bound");
    add(app, "gamma_32", &PipelineConfig::iss, &IssParams::gamma_32, "lambda3/lambda2 bound");
    add(app, "min_neighbors", &PipelineConfig::iss, &IssParams::min_neighbors, "ISS neighbor floor");
    add(app, "feature_radius", &PipelineConfig::fpfh, &FpfhParams::feature_radius, "FPFH radius (m)");
    add(app, "bins_per_feature", &PipelineConfig::fpfh, &FpfhParams::bins_per_feature, "FPFH bins per angle");
    add(app, "correspondence_distance", &PipelineConfig::ransac, &RansacParams::correspondence_distance,
        "RANSAC inlier distance (m)");
    add(app, "max_iterations", &PipelineConfig::ransac, &RansacParams::max_iterations, "RANSAC iteration cap");
    add(app, "confidence", &PipelineConfig::ransac, &RansacParams::confidence, "RANSAC confidence");
    add(app, "sample_size", &PipelineConfig::ransac, &RansacParams::sample_size, "RANSAC sample size");
    add(app, "similarity_edge_ratio", &PipelineConfig::ransac, &RansacParams::similarity_edge_ratio,
        "edge-length pruning ratio");
    add(app, "icp_max_iterations", &PipelineConfig::icp, &IcpParams::max_iterations, "ICP iteration cap");
    add(app, "distance_threshold", &PipelineConfig::icp, &IcpParams::distance_threshold, "ICP pairing distance (m)");
    add(app, "convergence_epsilon", &PipelineConfig::icp, &IcpParams::convergence_epsilon, "ICP relative rmse change");
    add(app, "match_distance", &PipelineConfig::similarity, &SimilarityParams::match_distance,
        "similarity match distance (m)");
    add(app, "threshold", &PipelineConfig::similarity, &SimilarityParams::decision_threshold,
        "decision threshold");
    app->add_option("--seed", seed, "RANSAC seed (default: content hash)");
  }

  PipelineConfig build() const {
    PipelineConfig c = PipelineConfig::for_profile(*parse_profile(profile));
    for (const auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(c);
    if (seed) c.ransac.rng_seed = *seed;
    c.validate();
    return c;
  }

  std::optional<std::uint64_t> seed;
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

PointCloud read_scan(const std::filesystem::path& path) {
  std::vector<std::string> warnings;
  PointCloud cloud = load_ply(path, &warnings);
  print_warnings(warnings);
  return cloud;
}

int run_enroll(const ParamFlags& flags, const std::string& scan_path, const std::string& out_path) {
  const PipelineConfig config = flags.build();
  const PointCloud raw = read_scan(scan_path);
  const ProcessedScan scan = process_scan(raw, config);
  const Template tmpl = make_template(scan, config);
  save_template(tmpl, out_path);
  std::printf("profile: %s\n", std::string(profile_name(config.profile)).c_str());
  std::printf("raw points: %zu\n", scan.raw_point_count);
  std::printf("preprocessed points: %zu\n", scan.cloud.size());
  std::printf("keypoints: %zu\n", scan.keypoints.size());
  std::printf("reduction rate: %.3f\n", data_reduction_rate(scan.raw_point_count, scan.keypoints.size()));
  std::printf("template: %s (%zu bytes)\n", out_path.c_str(),
              serialized_size(tmpl.size(), tmpl.descriptor_dimension()));
  return kExitOk;
}

int run_verify(const ParamFlags& flags, const std::string& template_path, const std::string& probe_path) {
  const PipelineConfig config = flags.build();
  const Template tmpl = load_template(template_path);
  const PointCloud probe = read_scan(probe_path);
  const AuthDecision d = verify(tmpl, probe, config);
  std::printf("similarity: %.3f\n", d.similarity);
  std::printf("matched: %zu/%zu\n", d.matched_count, d.template_count);
  std::printf("threshold: %.3f\n", d.threshold);
  const auto& t = d.registration.transform;
  std::printf("rotation: [%.6f %.6f %.6f; %.6f %.6f %.6f; %.6f %.6f %.6f]\n", t.rotation(0, 0), t.rotation(0, 1),
              t.rotation(0, 2), t.rotation(1, 0), t.rotation(1, 1), t.rotation(1, 2), t.rotation(2, 0),
              t.rotation(2, 1), t.rotation(2, 2));
  std::printf("translation: [%.6f %.6f %.6f]\n", t.translation.x(), t.translation.y(), t.translation.z());
  std::printf("fitness: %.3f  rmse: %.4f\n", d.registration.fitness, d.registration.rmse);
  if (!d.diagnostic.empty()) std::printf("diagnostic: %s\n", d.diagnostic.c_str());
  std::printf("decision: %s\n", d.accepted ? "accept" : "reject");
  return d.accepted ? kExitOk : kExitReject;
}

int run_keypoints(const ParamFlags& flags, const std::string& scan_path, const std::string& out_path, bool ascii) {
  const PipelineConfig config = flags.build();
  const ProcessedScan scan = process_scan(read_scan(scan_path), config);
  PointCloud kp;
  kp.points = scan.keypoints.positions;
  save_ply(kp, out_path, ascii ? PlyFormat::ascii : PlyFormat::binary_little_endian);
  std::printf("preprocessed points: %zu\n", scan.cloud.size());
  std::printf("keypoints: %zu (%.2f%%)\n", kp.size(),
              100.0 * static_cast<double>(kp.size()) / static_cast<double>(scan.cloud.size()));
  std::printf("written: %s\n", out_path.c_str());
  return kExitOk;
}

struct EvalFlags {
  std::string manifest;
  std::size_t synthetic = 0;
  std::uint64_t synthetic_seed = SyntheticOptions{}.seed;
  bool rescan = false;
  std::string report;
  std::string scores;
  unsigned threads = 1;
};

int run_eval(const ParamFlags& flags, const EvalFlags& e) {
  const PipelineConfig config = flags.build();
  if (e.manifest.empty() == (e.synthetic == 0)) {
    std::cerr << "error: give exactly one of a manifest path or --synthetic N\n";
    return kExitError;
  }
  PairSource source;
  if (e.synthetic > 0) {
    if (e.synthetic < 4) {
      std::cerr << "error: --synthetic needs N >= 4\n";
      return kExitError;
    }
    SyntheticOptions opt;
    opt.seed = e.synthetic_seed;
    opt.rescan_genuine = e.rescan;
    source = synthetic_pairs(e.synthetic - e.synthetic / 2, e.synthetic / 2, opt);
  } else {
    source = manifest_pairs(load_manifest(e.manifest));
  }
  const EvalReport report = evaluate_pairs(source, config, EvalOptions{e.threads});
  const std::vector<EvalReport> rows{report};
  std::cout << summary_table(rows);
  std::printf("pairs: %zu genuine, %zu impostor\n", report.genuine_count(), report.impostor_count());
  std::printf("eer: %.3f at threshold %.3f\n", report.eer, report.eer_threshold);
  std::printf("mean keypoints per raw point: %.3f%%\n", 100.0 * report.mean_keypoint_fraction_raw);
  if (!e.report.empty()) report_csv_export(report, e.report);
  if (!e.scores.empty()) score_distribution_export(report, e.scores);
  return kExitOk;
}

struct GenerateFlags {
  std::string out;
  std::uint64_t room = 1;
  std::optional<std::uint64_t> perturb;
  double density = SyntheticOptions{}.density;
  bool ascii = false;
};

int run_generate(const GenerateFlags& g) {
  const SyntheticOptions opt;
  PointCloud cloud = generate_room(random_room_spec(g.room, g.density, opt.room_noise));
  if (g.perturb) {
    Rng rng(*g.perturb);
    const RigidTransform motion = rng.rigid_transform(opt.max_angle, opt.max_translation);
    cloud = perturb_scan(cloud, motion, opt.probe_noise, opt.probe_crop, *g.perturb + 1);
  }
  save_ply(cloud, g.out, g.ascii ? PlyFormat::ascii : PlyFormat::binary_little_endian);
  std::printf("points: %zu\n", cloud.size());
  std::printf("written: %s\n", g.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-based authentication with sparse keypoint templates"};
  app.require_subcommand(1);

  ParamFlags enroll_flags, verify_flags, keypoint_flags, eval_flags;

  std::string scan_path, out_path, template_path, probe_path;
  auto* enroll_cmd = app.add_subcommand("enroll", "build a template from a scan");
  enroll_cmd->add_option("scan", scan_path, "enrollment scan (PLY)")->required();
  enroll_cmd->add_option("-o,--out", out_path, "template output path")->required();
  enroll_flags.attach(enroll_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "verify a probe scan against a template");
  verify_cmd->add_option("template", template_path, "template file")->required();
  verify_cmd->add_option("probe", probe_path, "probe scan (PLY)")->required();
  verify_flags.attach(verify_cmd);

  bool ascii = false;
  auto* kp_cmd = app.add_subcommand("keypoints", "export the keypoints of a scan as PLY");
  kp_cmd->add_option("scan", scan_path, "scan (PLY)")->required();
  kp_cmd->add_option("-o,--out", out_path, "keypoint PLY output path")->required();
  kp_cmd->add_flag("--ascii", ascii, "write ASCII PLY");
  keypoint_flags.attach(kp_cmd);

  EvalFlags e;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate genuine/impostor pairs");
  eval_cmd->add_option("manifest", e.manifest, "CSV: template_path,probe_path,is_genuine,label");
  eval_cmd->add_option("--synthetic", e.synthetic, "generate N synthetic pairs (half genuine)");
  eval_cmd->add_option("--synthetic_seed", e.synthetic_seed, "seed of the synthetic set")->capture_default_str();
  eval_cmd->add_flag("--rescan", e.rescan, "genuine probes resample the room instead of reusing the scan");
  eval_cmd->add_option("--report", e.report, "per-pair report CSV");
  eval_cmd->add_option("--scores", e.scores, "score distribution CSV");
  eval_cmd->add_option("--threads", e.threads, "worker threads")->capture_default_str();
  eval_flags.attach(eval_cmd);

  GenerateFlags g;
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic room scan as PLY");
  gen_cmd->add_option("-o,--out", g.out, "PLY output path")->required();
  gen_cmd->add_option("--room", g.room, "room layout seed")->capture_default_str();
  gen_cmd->add_option("--perturb", g.perturb, "move, jitter and crop the scan using this seed");
  gen_cmd->add_option("--density", g.density, "surface samples per square meter")->capture_default_str();
  gen_cmd->add_flag("--ascii", g.ascii, "write ASCII PLY");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitError;
  }

  try {
    if (*enroll_cmd) return run_enroll(enroll_flags, scan_path, out_path);
    if (*verify_cmd) return run_verify(verify_flags, template_path, probe_path);
    if (*kp_cmd) return run_keypoints(keypoint_flags, scan_path, out_path, ascii);
    if (*eval_cmd) return run_eval(eval_flags, e);
    if (*gen_cmd) return run_generate(g);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
