#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pcseg/augmentation.hpp"
#include "pcseg/cloud_io.hpp"
#include "pcseg/error.hpp"
#include "pcseg/labels_io.hpp"
#include "pcseg/matrix_io.hpp"
#include "pcseg/merge.hpp"
#include "pcseg/metrics.hpp"
#include "pcseg/parallel.hpp"
#include "pcseg/random.hpp"
#include "pcseg/synth.hpp"

namespace pcseg::cli {

namespace {

using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path with_suffix(const std::string& prefix, const char* suffix) { return fs::path(prefix + suffix); }

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "input '" + path + "' does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file << text;
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void finish(const Invocation& inv, std::vector<fs::path> inputs, std::vector<fs::path> outputs,
            const fs::path& manifest_path, Clock::time_point t0) {
  Manifest m;
  m.invocation = inv;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.input_checksum = hex64(fnv1a_files(m.inputs));
  m.wall_time_s = seconds_since(t0);
  write_manifest(m, manifest_path);
}

// Cloud, index, frames and descriptors shared by the segmentation commands.
struct Prepared {
  PointCloud cloud;
  Octree tree;
  std::vector<LocalFrame> frames;
  DescriptorMatrix descriptors;
  WeakLabelSet weak;
  std::vector<fs::path> inputs;
  bool sampled = false;
};

Prepared prepare(const Invocation& inv, bool need_weak) {
  const SceneConfig& cfg = inv.config;
  Prepared p;
  const std::string& in = inv.get("in");
  require_file(in);
  p.cloud = load_cloud(in);
  if (p.cloud.empty()) throw Error(ErrorKind::Data, "input cloud '" + in + "' has no points");
  p.inputs.emplace_back(in);
  p.tree = Octree::build(p.cloud.positions);
  p.frames = estimate_frames(p.cloud, p.tree, cfg.radius);
  if (inv.has("embeddings")) {
    require_file(inv.get("embeddings"));
    p.descriptors = load_external_embeddings(inv.get("embeddings"), p.cloud.size());
    p.inputs.emplace_back(inv.get("embeddings"));
  } else {
    if (cfg.descriptor == DescriptorKind::External) {
      throw Error(ErrorKind::Usage, "descriptor = external needs --embeddings");
    }
    p.descriptors =
        compute_descriptors(p.cloud, p.frames, p.tree, cfg.descriptor, cfg.effective_descriptor_radius());
  }
  if (inv.has("weak")) {
    require_file(inv.get("weak"));
    p.weak = load_weak_labels(inv.get("weak"), p.cloud);
    p.inputs.emplace_back(inv.get("weak"));
  } else if (inv.has("sample-fraction")) {
    p.weak = sample_weak_labels(p.cloud, parse_number("sample-fraction", inv.get("sample-fraction")), cfg.seed);
    p.sampled = true;
  } else if (need_weak) {
    throw Error(ErrorKind::Usage, "propagate needs --weak or --sample-fraction");
  }
  return p;
}

Partition segment(const Prepared& p, const SceneConfig& cfg) {
  const auto seeds = select_seeds(p.frames, p.weak, cfg.seed_fraction);
  if (seeds.empty()) throw Error(ErrorKind::Usage, "no seeds: give weak labels or a positive seed_fraction");
  Partition part = grow(p.cloud, p.frames, p.descriptors, p.tree, seeds, cfg);
  initial_pseudo_labels(part, p.weak);
  return part;
}

std::size_t count_regions(const Partition& part) {
  return static_cast<std::size_t>(std::count_if(part.regions.begin(), part.regions.end(),
                                                [](const Region& r) { return !r.members.empty(); }));
}

void cmd_oversegment(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  const std::string prefix = inv.get("out");
  Prepared p = prepare(inv, false);
  const Partition part = segment(p, inv.config);
  std::vector<fs::path> outputs = {with_suffix(prefix, ".partition"), with_suffix(prefix, ".regions"),
                                   with_suffix(prefix, ".labels")};
  save_partition(part, outputs[0]);
  save_region_table(part, outputs[1]);
  save_labels(to_assignments(part), outputs[2]);
  if (p.sampled) {
    outputs.push_back(with_suffix(prefix, ".weak"));
    save_weak_labels(p.weak, outputs.back());
  }
  out << "points " << p.cloud.size() << "\nregions " << count_regions(part) << "\n";
  finish(inv, p.inputs, outputs, with_suffix(prefix, ".manifest"), t0);
}

void cmd_propagate(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  const SceneConfig& cfg = inv.config;
  const std::string prefix = inv.get("out");
  auto predictor = make_predictor(inv.get_or("predictor", "builtin"));
  Prepared p = prepare(inv, true);
  Partition part = segment(p, cfg);
  int classes = p.weak.num_classes;
  for (const auto& e : p.weak.entries) classes = std::max(classes, e.class_id + 1);
  MergeState state = MergeState::init(p.cloud, p.frames, p.descriptors, std::move(part), classes);
  const TraceRow initial = label_quality(state);
  const SelfTrainResult result = self_train(state, *predictor, cfg);

  std::vector<fs::path> outputs = {with_suffix(prefix, ".labels"), with_suffix(prefix, ".trace.csv"),
                                   with_suffix(prefix, ".boxes")};
  save_labels(result.labels, outputs[0]);
  save_trace(result.trace, outputs[1]);
  save_boxes(extract_instances(state, p.tree, cfg.radius), outputs[2]);
  if (p.sampled) {
    outputs.push_back(with_suffix(prefix, ".weak"));
    save_weak_labels(p.weak, outputs.back());
  }
  out << "points " << p.cloud.size() << "\nweak_labels " << p.weak.entries.size() << "\nregions "
      << state.row_regions().size() << "\ninitial_labeled_fraction " << initial.labeled_fraction << "\n";
  if (!result.trace.empty()) {
    const auto& last = result.trace.back();
    out << "final_labeled_fraction " << last.labeled_fraction << "\n";
    if (last.pseudo_recall) out << "final_accuracy " << *last.pseudo_recall << "\n";
  }
  finish(inv, p.inputs, outputs, with_suffix(prefix, ".manifest"), t0);
}

struct LabelColumns {
  std::vector<ClassId> classes;
  std::vector<std::int32_t> regions;
  std::vector<double> scores;
};

LabelColumns label_columns(const std::string& path, std::optional<PointCloud>& cloud_out) {
  require_file(path);
  LabelColumns c;
  if (fs::path(path).extension() == ".labels") {
    for (const auto& a : load_labels(path)) {
      c.classes.push_back(a.class_id);
      c.regions.push_back(a.region);
      c.scores.push_back(a.confidence);
    }
    return c;
  }
  PointCloud cloud = load_cloud(path);
  if (!cloud.gt_labels) throw Error(ErrorKind::MissingChannel, "'" + path + "' carries no labels");
  c.classes = *cloud.gt_labels;
  c.regions = cloud.gt_instances ? *cloud.gt_instances : std::vector<std::int32_t>(cloud.size(), -1);
  c.scores.assign(cloud.size(), 1.0);
  cloud_out = std::move(cloud);
  return c;
}

void cmd_eval(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  const std::string task = inv.get_or("task", "sem");
  if (task != "sem" && task != "inst" && task != "overseg") {
    throw Error(ErrorKind::Usage, "unknown eval task '" + task + "' (sem, inst, overseg)");
  }
  std::optional<PointCloud> gt_cloud;
  std::optional<PointCloud> unused;
  const LabelColumns pred = label_columns(inv.get("pred"), unused);
  const LabelColumns gt = label_columns(inv.get("gt"), gt_cloud);
  if (pred.classes.size() != gt.classes.size()) {
    throw Error(ErrorKind::Shape, "prediction has " + std::to_string(pred.classes.size()) + " points, gt has " +
                                      std::to_string(gt.classes.size()));
  }
  std::vector<fs::path> inputs = {inv.get("pred"), inv.get("gt")};

  std::string csv = "task,class,metric,value\n";
  char buf[160];
  auto row = [&](const std::string& cls, const char* metric, double v) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6g\n", task.c_str(), cls.c_str(), metric, v);
    csv += buf;
  };
  if (task == "sem") {
    int classes = 0;
    for (ClassId c : pred.classes) classes = std::max(classes, c + 1);
    for (ClassId c : gt.classes) classes = std::max(classes, c + 1);
    const MiouResult r = miou(confusion_matrix(pred.classes, gt.classes, classes));
    for (int c = 0; c < classes; ++c) {
      if (r.valid[static_cast<std::size_t>(c)]) row(std::to_string(c), "iou", r.iou[static_cast<std::size_t>(c)]);
    }
    row("all", "miou", r.miou);
  } else if (task == "inst") {
    const auto pi = instances_from_labels(pred.classes, pred.regions, pred.scores);
    const auto gi = instances_from_labels(gt.classes, gt.regions);
    const ApResult r = instance_ap50(pi, gi);
    for (std::size_t k = 0; k < r.classes.size(); ++k) row(std::to_string(r.classes[k]), "ap50", r.ap[k]);
    row("all", "map50", r.mean_ap);
  } else {
    PointCloud cloud;
    if (inv.has("cloud")) {
      require_file(inv.get("cloud"));
      cloud = load_cloud(inv.get("cloud"));
      inputs.emplace_back(inv.get("cloud"));
    } else if (gt_cloud) {
      cloud = *gt_cloud;
    } else {
      throw Error(ErrorKind::Usage, "overseg eval needs --cloud when --gt is a label file");
    }
    if (cloud.size() != gt.classes.size()) throw Error(ErrorKind::Shape, "cloud and labels differ in point count");
    const double tol = inv.has("tolerance") ? parse_number("tolerance", inv.get("tolerance")) : inv.config.radius;
    const Octree tree = Octree::build(cloud.positions);
    const BoundaryPrf r = overseg_prf(tree, pred.regions, gt.classes, tol);
    row("all", "recall", r.recall);
    row("all", "precision", r.precision);
    row("all", "f1", r.f1);
  }
  out << csv;
  if (inv.has("out")) {
    write_text(inv.get("out"), csv);
    finish(inv, inputs, {inv.get("out")}, inv.get("out") + ".manifest", t0);
  }
}

void cmd_descriptor(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  const std::string& in = inv.get("in");
  require_file(in);
  const DescriptorKind kind = descriptor_kind_from_string(inv.get_or("kind", "adapted-pfh"));
  if (kind == DescriptorKind::External) throw Error(ErrorKind::Usage, "--kind external cannot be computed");
  const double radius =
      inv.has("radius") ? parse_number("radius", inv.get("radius")) : inv.config.effective_descriptor_radius();
  if (!(radius > 0.0)) throw Error(ErrorKind::Usage, "--radius must be > 0");
  const PointCloud cloud = load_cloud(in);
  const Octree tree = Octree::build(cloud.positions);
  const auto frames = estimate_frames(cloud, tree, inv.config.radius);
  const DescriptorMatrix d = compute_descriptors(cloud, frames, tree, kind, radius);
  write_matrix(to_float_matrix(d), inv.get("out"));
  std::size_t isolated = 0;
  for (auto f : d.isolated) isolated += f;
  out << "rows " << d.rows << "\ncols " << d.cols << "\nisolated " << isolated << "\n";
  finish(inv, {in}, {inv.get("out")}, inv.get("out") + ".manifest", t0);
}

std::vector<PointIndex> brute_knn(std::span<const Vec3> pts, const Vec3& q, std::size_t k) {
  std::vector<std::pair<double, PointIndex>> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d[i] = {squared_distance(pts[i], q), static_cast<PointIndex>(i)};
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<PointIndex> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

void cmd_bench_knn(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  std::vector<Vec3> points;
  std::vector<fs::path> inputs;
  Rng rng(inv.config.seed);
  if (inv.has("in")) {
    require_file(inv.get("in"));
    points = load_cloud(inv.get("in")).positions;
    inputs.emplace_back(inv.get("in"));
  } else {
    const auto n = parse_integer("uniform", inv.get_or("uniform", "100000"));
    if (n <= 0) throw Error(ErrorKind::Usage, "--uniform must be > 0");
    points.resize(static_cast<std::size_t>(n));
    for (auto& p : points) p = Vec3(uniform_unit(rng), uniform_unit(rng), uniform_unit(rng));
  }
  const auto q = parse_integer("queries", inv.get_or("queries", "100"));
  const auto k = parse_integer("k", inv.get_or("k", "8"));
  if (q < 0) throw Error(ErrorKind::Usage, "--queries must be >= 0");
  if (k <= 0 || static_cast<std::size_t>(k) > points.size()) {
    throw Error(ErrorKind::Usage, "--k must lie in [1, point count]");
  }
  std::string csv = "points,queries,k,build_s,octree_s,brute_s,speedup,identical\n";
  if (q > 0 && !points.empty()) {
    Vec3 lo = points[0];
    Vec3 hi = points[0];
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    std::vector<Vec3> queries(static_cast<std::size_t>(q));
    for (auto& x : queries) {
      for (int a = 0; a < 3; ++a) x[a] = lo[a] + (hi[a] - lo[a]) * uniform_unit(rng);
    }
    const auto tb = Clock::now();
    const Octree tree = Octree::build(points);
    const double build_s = seconds_since(tb);
    std::vector<std::vector<PointIndex>> fast(queries.size());
    const auto tq = Clock::now();
    for (std::size_t i = 0; i < queries.size(); ++i) fast[i] = tree.knn_query(queries[i], static_cast<std::size_t>(k));
    const double octree_s = seconds_since(tq);
    bool identical = true;
    const auto tf = Clock::now();
    for (std::size_t i = 0; i < queries.size(); ++i) {
      identical = brute_knn(points, queries[i], static_cast<std::size_t>(k)) == fast[i] && identical;
    }
    const double brute_s = seconds_since(tf);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%lld,%lld,%.6g,%.6g,%.6g,%.6g,%s\n", points.size(),
                  static_cast<long long>(q), static_cast<long long>(k), build_s, octree_s, brute_s,
                  octree_s > 0.0 ? brute_s / octree_s : 0.0, identical ? "true" : "false");
    csv += buf;
    if (!identical) throw Error(ErrorKind::Internal, "octree and brute-force KNN results differ");
  }
  out << csv;
  if (inv.has("out")) {
    write_text(inv.get("out"), csv);
    finish(inv, inputs, {inv.get("out")}, inv.get("out") + ".manifest", t0);
  }
}

void cmd_synth(const Invocation& inv, std::ostream& out) {
  const auto t0 = Clock::now();
  SceneSpec spec;
  std::vector<fs::path> inputs;
  if (inv.has("spec")) {
    require_file(inv.get("spec"));
    spec = load_scene_spec(inv.get("spec"));
    inputs.emplace_back(inv.get("spec"));
  } else if (inv.has("preset")) {
    spec = preset_scene(inv.get("preset"), inv.config.seed);
  } else {
    throw Error(ErrorKind::Usage, "synth needs --spec or --preset");
  }
  const PointCloud cloud = generate(spec);
  const fs::path path = inv.get("out");
  save_cloud(cloud, path, format_from_path(path));
  out << "points " << cloud.size() << "\nprimitives " << spec.primitives.size() << "\n";
  finish(inv, inputs, {path}, path.string() + ".manifest", t0);
}

void cmd_replay(const Invocation& inv, std::ostream& out) {
  const Manifest m = read_manifest(inv.get("manifest"));
  if (m.invocation.command == "replay") throw Error(ErrorKind::Usage, "a replay manifest cannot be replayed");
  if (!m.inputs.empty()) {
    for (const auto& f : m.inputs) require_file(f.string());
    if (hex64(fnv1a_files(m.inputs)) != m.input_checksum) {
      throw Error(ErrorKind::Data, "inputs changed since the manifest was written (checksum mismatch)");
    }
  }
  Invocation again = m.invocation;
  if (inv.has("out")) again.args["out"] = inv.get("out");
  run_invocation(again, out);
}

}  // namespace

void run_invocation(const Invocation& inv, std::ostream& out) {
  inv.config.validate();
  if (inv.has("threads")) {
    const auto t = parse_integer("threads", inv.get("threads"));
    if (t < 0) throw Error(ErrorKind::Usage, "--threads must be >= 0");
    set_max_threads(static_cast<std::size_t>(t));
  }
  if (inv.command == "oversegment") cmd_oversegment(inv, out);
  else if (inv.command == "propagate") cmd_propagate(inv, out);
  else if (inv.command == "eval") cmd_eval(inv, out);
  else if (inv.command == "descriptor") cmd_descriptor(inv, out);
  else if (inv.command == "bench-knn") cmd_bench_knn(inv, out);
  else if (inv.command == "synth") cmd_synth(inv, out);
  else if (inv.command == "replay") cmd_replay(inv, out);
  else throw Error(ErrorKind::Usage, "unknown command '" + inv.command + "'");
}

int exit_code_for(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    switch (pe->kind()) {
      case ErrorKind::Shape: return 3;
      case ErrorKind::Internal: return 4;
      default: return 2;
    }
  }
  return 4;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud oversegmentation, region merging and weak-label propagation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());

  std::string config_path;
  std::string threads;
  std::map<std::string, std::string> overrides;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"seed", "seed"},           {"radius", "radius"},         {"knn", "knn"},
      {"theta-th", "theta_th"},   {"zeta", "zeta"},             {"gamma", "gamma"},
      {"t-merge", "t_merge"},     {"t-seed", "t_seed"},         {"lambda-n", "lambda_n"},
      {"lambda-des", "lambda_des"}, {"lambda-seg", "lambda_seg"}, {"n-ths", "n_ths"},
      {"iterations", "iterations"}, {"seed-fraction", "seed_fraction"}, {"descriptor", "descriptor"},
      {"descriptor-radius", "descriptor_radius"},
  };
  for (const auto& [flag, key] : flags) app.add_option("--" + flag, overrides[key], "override config '" + key + "'");

  struct Sub {
    CLI::App* app;
    std::map<std::string, std::string> args;
  };
  std::map<std::string, Sub> subs;
  auto sub = [&](const std::string& name, const std::string& help,
                 const std::vector<std::tuple<std::string, std::string, bool>>& opts) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    for (const auto& [opt, desc, required] : opts) {
      auto* o = s.app->add_option("--" + opt, s.args[opt], desc);
      if (required) o->required();
    }
  };
  sub("oversegment", "seeded region growing; writes <out>.partition/.regions/.labels",
      {{"in", "input cloud (.xyz/.txt or .ply)", true},
       {"out", "output prefix", true},
       {"weak", "weak labels file ('index class' rows)", false},
       {"sample-fraction", "sample weak labels from the cloud's labels", false},
       {"embeddings", "RM3DMAT1 per-point embeddings used as descriptors", false}});
  sub("propagate", "self-training label propagation; writes <out>.labels/.trace.csv/.boxes",
      {{"in", "input cloud", true},
       {"out", "output prefix", true},
       {"weak", "weak labels file", false},
       {"sample-fraction", "sample weak labels from the cloud's labels", false},
       {"predictor", "builtin | oracle | uniform | file:<path>", false},
       {"embeddings", "RM3DMAT1 per-point embeddings", false}});
  sub("eval", "evaluation report CSV",
      {{"pred", "predicted .labels file", true},
       {"gt", "ground truth .labels file or labeled cloud", true},
       {"task", "sem | inst | overseg", false},
       {"cloud", "cloud for overseg boundaries", false},
       {"tolerance", "boundary tolerance in meters (default: radius)", false},
       {"out", "report CSV path", false}});
  sub("descriptor", "per-point descriptor dump (RM3DMAT1)",
      {{"in", "input cloud", true},
       {"kind", "adapted-pfh | original-pfh | fpfh", false},
       {"radius", "descriptor radius (default: config)", false},
       {"out", "output matrix path", true}});
  sub("bench-knn", "octree vs brute-force KNN timing",
      {{"in", "input cloud (default: uniform random points)", false},
       {"uniform", "number of uniform points when --in is absent", false},
       {"queries", "number of queries", false},
       {"k", "neighbors per query", false},
       {"out", "report CSV path", false}});
  sub("synth", "generate a synthetic labeled scene",
      {{"spec", "scene spec file", false},
       {"preset", "single-plane | two-planes | parallel-planes | five-primitives", false},
       {"out", "output cloud path", true}});
  sub("replay", "re-run a command from its manifest",
      {{"manifest", "manifest path", true}, {"out", "override the output path or prefix", false}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    Invocation inv;
    for (auto& [name, s] : subs) {
      if (s.app->parsed()) {
        inv.command = name;
        for (const auto& [k, v] : s.args) {
          if (!v.empty()) inv.args[k] = v;
        }
      }
    }
    if (!threads.empty()) inv.args["threads"] = threads;
    if (inv.command == "replay") {
      run_invocation(inv, out);
      return 0;
    }
    if (!config_path.empty()) {
      require_file(config_path);
      inv.config = SceneConfig::from_file(config_path);
    }
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) inv.config.set(key, value);
    }
    run_invocation(inv, out);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace pcseg::cli
