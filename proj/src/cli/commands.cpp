#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "manifest.hpp"

#include "avtopo/cake.hpp"
#include "avtopo/cli.hpp"
#include "avtopo/image_io.hpp"
#include "avtopo/metrics.hpp"
#include "avtopo/parallel.hpp"
#include "avtopo/preprocess.hpp"
#include "avtopo/skeletal.hpp"
#include "avtopo/synth.hpp"
#include "avtopo/topoloss.hpp"
#include "avtopo/verify/acceptance.hpp"

namespace avtopo::cli {
namespace {

// ------------------------------------------------------------------ settings

// A parameter that can be set on the command line or in the config file under
// `key` ("section.name"). The command line wins.
struct Setting {
  std::string key;
  CLI::Option* option = nullptr;
  std::function<void(const CLI::ConfigItem&)> load;
  std::function<json()> value;
};

class Settings {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    CLI::Option* o = app->add_option(flag, target, help + " [" + key + "]")->capture_default_str();
    if constexpr (requires { target.begin(); } && !std::is_same_v<T, std::string>)
      o->delimiter(',');
    register_setting(app, key, o, target);
    return o;
  }

  CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& key, bool& target,
                    const std::string& help) {
    CLI::Option* o = app->add_flag(flag, target, help + " [" + key + "]");
    register_setting(app, key, o, target);
    return o;
  }

  /// Applies config items to the settings of `active` that the command line
  /// left alone. Unknown keys are errors.
  void apply(const std::vector<CLI::ConfigItem>& items, const CLI::App* active) const {
    for (const CLI::ConfigItem& item : items) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      const std::string key = item.fullname();
      if (!known_.count(key)) fail(ErrorKind::parameter, "config: unknown field '" + key + "'");
      for (const CLI::App* app : {static_cast<const CLI::App*>(nullptr), active}) {
        const auto it = by_app_.find(app);
        if (it == by_app_.end()) continue;
        for (const Setting& s : it->second)
          if (s.key == key && s.option->count() == 0) s.load(item);
      }
    }
  }

  json values(const CLI::App* app) const {
    json out = json::object();
    const auto it = by_app_.find(app);
    if (it != by_app_.end())
      for (const Setting& s : it->second) out[s.key] = s.value();
    return out;
  }

 private:
  template <typename T>
  void register_setting(CLI::App* app, const std::string& key, CLI::Option* o, T& target) {
    const CLI::App* owner = app->get_parent() ? app : nullptr;
    by_app_[owner].push_back(
        {key, o,
         [&target](const CLI::ConfigItem& item) {
           T v{};
           if (!CLI::detail::lexical_conversion<T, T>(item.inputs, v))
             fail(ErrorKind::parameter,
                  "config: " + item.fullname() + ": cannot parse '" +
                      CLI::detail::join(item.inputs, ",") + "'");
           target = v;
         },
         [&target] { return json(target); }});
    known_.insert(key);
  }

  std::map<const CLI::App*, std::vector<Setting>> by_app_;
  std::set<std::string> known_;
};

// ------------------------------------------------------------------ helpers

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::string num(double v) { return fmt("%.17g", v); }

// Prefixes parameter errors with the config section they belong to.
void validated(const std::string& section, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::parameter) throw;
    throw Error(e.kind(), section + ": " + e.what());
  }
}

fs::path need(const std::string& path) {
  require(fs::exists(path), ErrorKind::io, "missing file: " + path);
  return path;
}

fs::path need_dir(const std::string& path) {
  require(fs::is_directory(path), ErrorKind::io, "missing directory: " + path);
  return path;
}

void make_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Raw float64 for ".f64", otherwise a normalized gray PNG.
RasterD read_values(const fs::path& p) {
  return p.extension() == ".f64" ? io::read_raw_f64(p) : io::read_png_gray(p);
}

void write_text(const fs::path& p, const std::string& text) {
  make_parent(p);
  std::ofstream os(p, std::ios::binary);
  os << text;
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + p.string());
}

void write_raw(Manifest& m, const fs::path& p, const RasterD& values) {
  make_parent(p);
  io::write_raw_f64(p, values);
  m.output(p);
  m.output(io::sidecar_path(p));
}

const char* to_string(GateState s) {
  return s == GateState::uniform ? "uniform" : "centerline_weighted";
}

// Runs fn(i) in parallel and rethrows the error of the lowest index, so the
// diagnostic does not depend on scheduling.
template <typename Fn>
void for_each_item(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ------------------------------------------------------------------ commands

struct Context {
  std::ostream& out;
  std::ostream& err;
  int jobs = 1;
};

using Body = std::function<int(Context&, Manifest&)>;

struct Registry {
  Settings settings;
  std::map<const CLI::App*, Body> bodies;
};

void add_preprocess(CLI::App& app, Registry& r) {
  struct State {
    PreprocessParams p;
    std::string in, out, enhanced, mode = "gray";
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("preprocess", "Illumination correction and vessel enhancement");
  sub->add_option("--in", st->in, "Fundus image (PNG)")->required();
  sub->add_option("--out", st->out, "Corrected RGB image (PNG)")->required();
  sub->add_option("--enhanced", st->enhanced,
                  "Enhanced image (PNG); default <out stem>.enhanced.png");
  auto& s = r.settings;
  s.add(sub, "--dark-patch", "preprocess.dark_patch", st->p.dark_patch, "Dark-channel window half-size");
  s.add(sub, "--atmosphere-quantile", "preprocess.atmosphere_quantile", st->p.atmosphere_quantile,
        "Dark-channel quantile for the bright reference");
  s.add(sub, "--transmission-floor", "preprocess.transmission_floor", st->p.transmission_floor,
        "Lower bound on the transmission");
  s.add(sub, "--hp-sigma", "preprocess.hp_sigma", st->p.hp_sigma, "High-pass Gaussian sigma, px");
  s.add(sub, "--enhance-mode", "preprocess.enhance_mode", st->mode,
        "Enhance the gray projection (gray) or each channel (rgb)");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    validated("preprocess", [&] {
      st->p.validate();
      require(st->mode == "gray" || st->mode == "rgb", ErrorKind::parameter,
              "enhance_mode must be gray or rgb");
    });
    const fs::path in = need(st->in), out = st->out;
    const fs::path enhanced =
        st->enhanced.empty() ? out.parent_path() / (out.stem().string() + ".enhanced.png")
                             : fs::path(st->enhanced);
    m.input(in);
    const Rgb<double> corrected = correct_illumination(io::read_png_rgb(in), st->p);
    make_parent(out);
    io::write_png_rgb(out, corrected);
    m.output(out);
    make_parent(enhanced);
    if (st->mode == "gray")
      io::write_png_gray(enhanced, enhance_vessels(rgb_to_gray(corrected), st->p.hp_sigma));
    else
      io::write_png_rgb(enhanced, enhance_vessels(corrected, st->p.hp_sigma));
    m.output(enhanced);
    return exit_ok;
  };
}

json cake_json(const CakeParams& p) {
  return {{"n_orientations", p.n_orientations}, {"kernel_size", p.kernel_size},
          {"design_size", p.design_size},       {"spline_order", p.spline_order},
          {"radial_decay", p.radial_decay},     {"dc_sigma", p.dc_sigma}};
}

void add_cakebank(CLI::App& app, Registry& r) {
  struct State {
    CakeParams p;
    std::string out_dir;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("cakebank", "Build the cake-wavelet filter bank");
  sub->add_option("--out-dir", st->out_dir, "Output directory")->required();
  auto& s = r.settings;
  s.add(sub, "--n", "cakewavelets.n_orientations", st->p.n_orientations, "Number of orientations (even)");
  s.add(sub, "--size", "cakewavelets.kernel_size", st->p.kernel_size, "Cropped kernel side (odd)");
  s.add(sub, "--design-size", "cakewavelets.design_size", st->p.design_size,
        "Frequency-domain synthesis grid side (odd)");
  s.add(sub, "--spline-order", "cakewavelets.spline_order", st->p.spline_order,
        "Angular B-spline order");
  s.add(sub, "--radial-decay", "cakewavelets.radial_decay", st->p.radial_decay,
        "Start of the radial fall-off, fraction of Nyquist");
  s.add(sub, "--dc-sigma", "cakewavelets.dc_sigma", st->p.dc_sigma, "DC window width, px");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    validated("cakewavelets", [&] { st->p.validate(); });
    const fs::path dir = st->out_dir;
    fs::create_directories(dir);
    const CakeBank bank = build_bank(st->p);
    json index{{"schema", 1}, {"params", cake_json(st->p)}, {"thetas", bank.thetas},
               {"kernels", json::array()}};
    for (std::size_t i = 0; i < bank.kernels.size(); ++i) {
      const RasterD& k = bank.kernels[i];
      const std::string name = fmt("kernel_%02zu", i);
      io::write_raw_f64(dir / (name + ".f64"), k);
      const double lo = k.minCoeff(), hi = k.maxCoeff();
      const RasterD shown = hi > lo ? RasterD((k - lo) / (hi - lo)) : RasterD::Constant(k.rows(), k.cols(), 0.5);
      io::write_png_gray(dir / (name + ".png"), shown);
      index["kernels"].push_back(name + ".f64");
    }
    write_text(dir / "bank.json", index.dump(2) + "\n");
    m.output(dir);
    m.results()["n_orientations"] = bank.thetas.size();
    return exit_ok;
  };
}

void add_orientation_scores(CLI::App& app, Registry& r) {
  struct State {
    std::string image, bank, out;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("orientation-scores", "Correlate an image with a filter bank");
  sub->add_option("--image", st->image, "Gray or RGB image (PNG); RGB uses luminance")->required();
  sub->add_option("--bank", st->bank, "Directory written by cakebank")->required();
  sub->add_option("--out", st->out, "Output directory for score_NN.f64")->required();

  r.bodies[sub] = [st](Context& ctx, Manifest& m) {
    const fs::path image = need(st->image), bank_dir = need_dir(st->bank);
    const fs::path index_path = need((bank_dir / "bank.json").string());
    json index;
    try {
      index = json::parse(io::read_bytes(index_path));
    } catch (const json::exception& e) {
      fail(ErrorKind::decode, index_path.string() + ": " + e.what());
    }
    std::vector<RasterD> kernels;
    try {
      for (const auto& name : index.at("kernels"))
        kernels.push_back(io::read_raw_f64(bank_dir / name.get<std::string>()));
    } catch (const json::exception& e) {
      fail(ErrorKind::decode, index_path.string() + ": " + e.what());
    }
    require(!kernels.empty(), ErrorKind::decode, index_path.string() + ": no kernels");
    m.input(image);
    m.input(bank_dir);
    const OrientationScores scores = orientation_scores(io::read_png_gray(image), kernels, ctx.jobs);
    const fs::path out = st->out;
    fs::create_directories(out);
    for (std::size_t i = 0; i < scores.scores.size(); ++i)
      write_raw(m, out / fmt("score_%02zu.f64", i), scores.scores[i]);
    m.results()["n_orientations"] = scores.scores.size();
    if (index.contains("thetas")) m.results()["thetas"] = index["thetas"];
    return exit_ok;
  };
}

void add_skeleton(CLI::App& app, Registry& r) {
  struct State {
    std::string in, out, labels;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("skeleton", "Thin a binary mask and label its branches");
  sub->add_option("--in", st->in, "Binary mask (PNG, foreground >= 0.5)")->required();
  sub->add_option("--out", st->out, "Skeleton mask (PNG)")->required();
  sub->add_option("--labels", st->labels, "Branch labels (paletted PNG)");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    const fs::path in = need(st->in), out = st->out;
    m.input(in);
    const Mask skel = thin(io::read_png_mask(in));
    make_parent(out);
    io::write_png_mask(out, skel);
    m.output(out);
    const BranchLabeling bl = branch_decompose(skel);
    if (!st->labels.empty()) {
      make_parent(st->labels);
      io::write_png_labels(st->labels, bl.labels);
      m.output(st->labels);
    }
    m.results() = {{"skeleton_pixels", count(skel)},
                   {"n_branches", bl.n_branches},
                   {"junction_pixels", bl.junctions.size()},
                   {"junction_nodes", bl.n_junction_nodes},
                   {"endpoints", bl.endpoints.size()}};
    return exit_ok;
  };
}

void add_geodist(CLI::App& app, Registry& r) {
  struct State {
    std::string mask, seeds, out, cost_map;
    double w_max = 2.0;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("geodist", "Geodesic distance inside a mask by fast marching");
  sub->add_option("--mask", st->mask, "Domain mask (PNG)")->required();
  sub->add_option("--seeds", st->seeds, "Seed mask (PNG)")->required();
  sub->add_option("--out", st->out, "Distances, raw float64 (+inf where unreached)")->required();
  sub->add_option("--cost-map", st->cost_map, "Also write the cost map alpha (raw float64)");
  r.settings.add(sub, "--w-max", "topoloss.w_max", st->w_max, "Cost-map weight on the centerline");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    validated("topoloss", [&] {
      require(st->w_max >= 1.0, ErrorKind::parameter, "w_max must be >= 1");
    });
    const fs::path mask_path = need(st->mask), seeds_path = need(st->seeds);
    m.input(mask_path);
    m.input(seeds_path);
    const Mask mask = io::read_png_mask(mask_path), seeds = io::read_png_mask(seeds_path);
    require_same_shape(mask, seeds, "geodist (mask vs seeds)");
    const GeodesicField field = geodesic_distance(mask, seeds);
    write_raw(m, st->out, field.dist);
    if (!st->cost_map.empty()) {
      const Mask on = ((mask != 0) && (seeds != 0)).cast<std::uint8_t>();
      write_raw(m, st->cost_map, build_cost_map(mask, on, field.dist, st->w_max).alpha);
    }
    double d_max = 0.0;
    for (Index i = 0; i < field.dist.size(); ++i)
      if (field.reached(i)) d_max = std::max(d_max, field.dist(i));
    m.results() = {{"reached", count(field.reached)}, {"mask_pixels", count(mask)},
                   {"max_distance", d_max}};
    return exit_ok;
  };
}

// Loss options shared by `loss` and `grad-check`.
struct LossOptions {
  std::vector<double> lambda{1.0, 0.5, 0.5, 0.5};
  int k = 5;
  double epsilon = 1e-7;
  double bce_clamp = 1e-7;
  std::string reduction = "sum";

  void add(Settings& s, CLI::App* sub) {
    s.add(sub, "--lambda", "topoloss.lambda", lambda, "Weights of Dice, clDice, MSE, BCE");
    s.add(sub, "--k", "topoloss.k", k, "Soft-skeleton iterations");
    s.add(sub, "--epsilon", "topoloss.epsilon", epsilon, "Smoothing term of every ratio");
    s.add(sub, "--bce-clamp", "topoloss.bce_clamp", bce_clamp, "BCE probability clamp");
    s.add(sub, "--reduction", "topoloss.reduction", reduction, "Class reduction: sum or mean");
  }

  LossConfig config() const {
    LossConfig c;
    validated("topoloss", [&] {
      require(lambda.size() == 4, ErrorKind::parameter, "lambda needs 4 values");
      require(reduction == "sum" || reduction == "mean", ErrorKind::parameter,
              "reduction must be sum or mean");
      c.weights = {lambda[0], lambda[1], lambda[2], lambda[3]};
      c.skel = {k, epsilon};
      c.bce_clamp = bce_clamp;
      c.reduction = reduction == "sum" ? ClassReduction::sum : ClassReduction::mean;
      c.validate();
    });
    return c;
  }
};

json loss_json(const ClassLoss& l) {
  return {{"dice", l.dice}, {"cldice", l.cldice}, {"mse", l.mse}, {"bce", l.bce}, {"total", l.total}};
}

void add_loss(CLI::App& app, Registry& r) {
  struct State {
    LossOptions loss;
    double gate = 0.6, w_max = 2.0;
    std::string pred_dir, gt;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("loss", "Evaluate the per-class and total loss");
  sub->add_option("--pred-dir", st->pred_dir,
                  "Directory with arteriole, venule and vessel maps (.f64 or .png)")
      ->required();
  sub->add_option("--gt", st->gt, "Ground-truth label image (RITE colors, PNG)")->required();
  st->loss.add(r.settings, sub);
  r.settings.add(sub, "--gate", "topoloss.gate", st->gate, "Vessel Dice score that enables the cost map");
  r.settings.add(sub, "--w-max", "topoloss.w_max", st->w_max, "Cost-map weight on the centerline");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    const LossConfig config = st->loss.config();
    std::optional<GatePolicy> gate;
    validated("topoloss", [&] {
      gate.emplace(st->gate);
      require(st->w_max >= 1.0, ErrorKind::parameter, "w_max must be >= 1");
    });
    const fs::path dir = need_dir(st->pred_dir), gt_path = need(st->gt);
    std::vector<ProbMap> preds;
    for (AvClass c : kAllClasses) {
      const std::string name(to_string(c));
      fs::path p = dir / (name + ".f64");
      if (!fs::exists(p)) p = dir / (name + ".png");
      require(fs::exists(p), ErrorKind::io,
              "missing file: " + (dir / (name + ".f64")).string() + " (or .png)");
      m.input(p);
      preds.push_back(ProbMap::checked(c, read_values(p)));
    }
    m.input(gt_path);
    const AVGroundTruth gt = decode_rite_label(io::read_png_rgb8(gt_path));
    const LossTargets targets = make_targets(gt, st->w_max);
    const LossBreakdown b = total_loss(preds, targets, config, *gate);
    json per_class = json::object();
    for (AvClass c : kAllClasses) per_class[std::string(to_string(c))] = loss_json(b.per_class[c]);
    m.results() = {{"per_class", per_class},
                   {"total", b.total},
                   {"gate_state", to_string(b.gate_state)},
                   {"vessel_dice_score", b.vessel_dice_score}};
    return exit_ok;
  };
}

void add_grad_check(CLI::App& app, Registry& r) {
  struct State {
    LossOptions loss;
    verify::GradCheckOptions opt;
    double tol = 1e-4;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("grad-check", "Analytic loss gradient vs central differences");
  auto& s = r.settings;
  s.add(sub, "--instances", "gradcheck.instances", st->opt.instances, "Random instances");
  s.add(sub, "--size", "gradcheck.size", st->opt.size, "Instance side, px");
  s.add(sub, "--step", "gradcheck.step", st->opt.h, "Central-difference step");
  s.add(sub, "--min-grad", "gradcheck.min_grad", st->opt.min_grad,
        "Skip pixels whose analytic gradient is smaller");
  s.add(sub, "--seed", "gradcheck.seed", st->opt.seed, "Seed of the first instance");
  s.add(sub, "--tol", "gradcheck.tol", st->tol, "Largest accepted relative error");
  st->loss.add(s, sub);

  r.bodies[sub] = [st](Context& ctx, Manifest& m) {
    st->opt.config = st->loss.config();
    verify::GradCheckReport rep;
    validated("gradcheck", [&] { rep = verify::gradient_check(st->opt, ctx.jobs); });
    const bool pass = rep.max_relative_error <= st->tol;
    m.results() = {{"max_relative_error", rep.max_relative_error},
                   {"gradients_compared", rep.pixels},
                   {"instances", rep.instances},
                   {"pass", pass}};
    return pass ? exit_ok : exit_failed;
  };
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const MetricReport& r) {
  const MetricCounts& c = r.counts;
  auto conf = [](const ConfusionCounts& k) {
    return json{{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}, {"tn", k.tn}};
  };
  auto rate = [](const RateCount& k) { return json{{"hit", k.hit}, {"total", k.total}}; };
  return {{"f1_all", opt(r.f1_all)},
          {"acc_all", opt(r.acc_all)},
          {"f1_centerline", opt(r.f1_centerline)},
          {"acc_centerline", opt(r.acc_centerline)},
          {"branch_rate", opt(r.branch_rate)},
          {"tree_length_rate", opt(r.tree_length_rate)},
          {"vessel_rate", opt(r.vessel_rate)},
          {"counts",
           {{"av_all", conf(c.av_all)},
            {"av_centerline", conf(c.av_centerline)},
            {"branch", rate(c.branch)},
            {"tree_length", rate(c.tree_length)},
            {"vessel", rate(c.vessel)}}}};
}

// Drops the AV metrics of the region that was not asked for.
MetricReport restrict(MetricReport r, const std::string& region) {
  if (region == "all") r.f1_centerline = r.acc_centerline = std::nullopt;
  if (region == "centerline") r.f1_all = r.acc_all = std::nullopt;
  return r;
}

std::string csv_cell(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string csv_row(const std::string& name, const MetricReport& r) {
  const MetricCounts& c = r.counts;
  std::string row = name;
  for (const auto& v : {r.f1_all, r.acc_all, r.f1_centerline, r.acc_centerline, r.branch_rate,
                        r.tree_length_rate, r.vessel_rate})
    row += "," + csv_cell(v);
  for (const ConfusionCounts* k : {&c.av_all, &c.av_centerline})
    row += fmt(",%ld,%ld,%ld,%ld", static_cast<long>(k->tp), static_cast<long>(k->fp),
               static_cast<long>(k->fn), static_cast<long>(k->tn));
  for (const RateCount* k : {&c.branch, &c.tree_length, &c.vessel})
    row += fmt(",%ld,%ld", static_cast<long>(k->hit), static_cast<long>(k->total));
  return row + "\n";
}

void add_metrics(CLI::App& app, Registry& r) {
  struct State {
    std::string pred_dir, gt_dir, json_out, csv_out, region = "both";
    double tau = 0.8;
    bool include_crossings = false;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("metrics", "Overlap, mixed and topology metrics");
  sub->add_option("--pred-dir", st->pred_dir,
                  "Predicted label images (RITE colors, PNG), named as in --gt-dir")
      ->required();
  sub->add_option("--gt-dir", st->gt_dir, "Ground-truth label images (RITE colors, PNG)")->required();
  sub->add_option("--json", st->json_out, "Per-image and pooled report (JSON)");
  sub->add_option("--csv", st->csv_out, "Per-image and pooled report (CSV)");
  auto& s = r.settings;
  s.add(sub, "--tau", "metrics.tau", st->tau, "Covered fraction that detects a branch");
  s.add(sub, "--region", "metrics.region", st->region,
        "AV metrics to report: all, centerline or both");
  s.flag(sub, "--include-crossings", "metrics.include_crossings", st->include_crossings,
         "Count ground-truth crossings as arteriole");

  r.bodies[sub] = [st](Context& ctx, Manifest& m) {
    validated("metrics", [&] {
      require(st->tau > 0.0 && st->tau <= 1.0, ErrorKind::parameter, "tau must lie in (0, 1]");
      require(st->region == "all" || st->region == "centerline" || st->region == "both",
              ErrorKind::parameter, "region must be all, centerline or both");
    });
    const fs::path pred_dir = need_dir(st->pred_dir), gt_dir = need_dir(st->gt_dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(gt_dir))
      if (e.is_regular_file() && e.path().extension() == ".png")
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    require(!names.empty(), ErrorKind::precondition, "no .png label images in " + gt_dir.string());
    for (const std::string& n : names) {
      need((pred_dir / n).string());
      m.input(gt_dir / n);
      m.input(pred_dir / n);
    }

    std::vector<MetricCounts> counts(names.size());
    for_each_item(names.size(), ctx.jobs, [&](std::size_t i) {
      try {
        const AVGroundTruth gt = decode_rite_label(io::read_png_rgb8(gt_dir / names[i]));
        const AVGroundTruth p = decode_rite_label(io::read_png_rgb8(pred_dir / names[i]));
        counts[i] = evaluate_counts({p.arteriole, p.venule, p.vessel}, gt,
                                    {st->tau, st->include_crossings});
      } catch (const Error& e) {
        throw Error(e.kind(), names[i] + ": " + e.what());
      }
    });

    MetricCounts pooled;
    json images = json::array();
    std::string csv =
        "image,f1_all,acc_all,f1_centerline,acc_centerline,branch_rate,tree_length_rate,"
        "vessel_rate,all_tp,all_fp,all_fn,all_tn,cl_tp,cl_fp,cl_fn,cl_tn,branch_hit,"
        "branch_total,tree_hit,tree_total,vessel_hit,vessel_total\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      pooled += counts[i];
      const MetricReport rep = restrict(MetricReport::from_counts(counts[i]), st->region);
      json j = report_json(rep);
      j["image"] = names[i];
      images.push_back(j);
      csv += csv_row(names[i], rep);
    }
    const MetricReport pooled_rep = restrict(MetricReport::from_counts(pooled), st->region);
    csv += csv_row("pooled", pooled_rep);
    const json report{{"schema", 1}, {"images", images}, {"pooled", report_json(pooled_rep)}};
    if (!st->json_out.empty()) {
      write_text(st->json_out, report.dump(2) + "\n");
      m.output(st->json_out);
    }
    if (!st->csv_out.empty()) {
      write_text(st->csv_out, csv);
      m.output(st->csv_out);
    }
    const AggregateScores agg = aggregate_scores(MetricReport::from_counts(pooled));
    m.results() = {{"n_images", names.size()},
                   {"pooled", report_json(pooled_rep)},
                   {"overlap_score", opt(agg.overlap)},
                   {"topology_score", opt(agg.topology)}};
    return exit_ok;
  };
}

void add_roc(CLI::App& app, Registry& r) {
  struct State {
    std::string pred, gt, fov, csv;
    std::size_t n_thresholds = 1024;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("roc", "ROC curve and AUC of a probability map");
  sub->add_option("--pred", st->pred, "Probabilities (.f64 raw or gray PNG)")->required();
  sub->add_option("--gt", st->gt, "Ground-truth mask (PNG)")->required();
  sub->add_option("--fov", st->fov, "Field of view (PNG); default everything");
  sub->add_option("--csv", st->csv, "threshold,fpr,tpr rows and an auc footer");
  r.settings.add(sub, "--n-thresholds", "metrics.n_thresholds", st->n_thresholds,
                 "Most distinct thresholds kept");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    validated("metrics", [&] {
      require(st->n_thresholds >= 2, ErrorKind::parameter, "n_thresholds must be >= 2");
    });
    const fs::path pred = need(st->pred), gt_path = need(st->gt);
    m.input(pred);
    m.input(gt_path);
    const RasterD prob = read_values(pred);
    const Mask gt = io::read_png_mask(gt_path);
    Mask fov = full_mask(gt.rows(), gt.cols());
    if (!st->fov.empty()) {
      m.input(need(st->fov));
      fov = io::read_png_mask(st->fov);
    }
    require(((prob >= 0.0) && (prob <= 1.0)).all(), ErrorKind::precondition,
            "roc: probabilities must lie in [0,1]");
    const RocCurve curve = roc(prob, gt, fov, st->n_thresholds);
    if (!st->csv.empty()) {
      std::string text = "threshold,fpr,tpr\n";
      for (std::size_t k = 0; k < curve.thresholds.size(); ++k)
        text += num(curve.thresholds[k]) + "," + num(curve.fpr[k]) + "," + num(curve.tpr[k]) + "\n";
      text += "auc," + (curve.auc ? num(*curve.auc) : std::string("null")) + "\n";
      write_text(st->csv, text);
      m.output(st->csv);
    }
    m.results() = {{"auc", opt(curve.auc)}, {"points", curve.thresholds.size()}};
    return exit_ok;
  };
}

json spec_json(const TreeSpec& s) {
  return {{"seed", s.seed},           {"depth", s.depth},
          {"arm_length", s.arm_length}, {"arm_jitter", s.arm_jitter},
          {"arm_decay", s.arm_decay},   {"widths", s.widths},
          {"bend", s.bend},             {"min_angle", s.min_angle},
          {"max_angle", s.max_angle},   {"min_arm", s.min_arm},
          {"clearance", s.clearance},   {"canvas_width", s.canvas_width},
          {"canvas_height", s.canvas_height}, {"root_x", s.root_x},
          {"max_retries", s.max_retries}, {"max_restarts", s.max_restarts}};
}

void add_synth(CLI::App& app, Registry& r) {
  struct State {
    TreeSpec spec;
    std::string out_dir;
  };
  auto st = std::make_shared<State>();
  TreeSpec& t = st->spec;
  CLI::App* sub = app.add_subcommand("synth", "Generate a synthetic vessel tree");
  sub->add_option("--out-dir", st->out_dir, "Output directory")->required();
  auto& s = r.settings;
  s.add(sub, "--seed", "synthgen.seed", t.seed, "Random seed");
  s.add(sub, "--depth", "synthgen.depth", t.depth, "Branching depth");
  s.add(sub, "--arm-length", "synthgen.arm_length", t.arm_length, "Mean trunk length, px");
  s.add(sub, "--arm-jitter", "synthgen.arm_jitter", t.arm_jitter, "Uniform jitter on arm lengths, px");
  s.add(sub, "--arm-decay", "synthgen.arm_decay", t.arm_decay, "Length factor per level");
  s.add(sub, "--widths", "synthgen.widths", t.widths, "Vessel width per level, px");
  s.add(sub, "--bend", "synthgen.bend", t.bend, "Largest heading change per step, rad");
  s.add(sub, "--min-angle", "synthgen.min_angle", t.min_angle, "Smallest branching angle, deg");
  s.add(sub, "--max-angle", "synthgen.max_angle", t.max_angle, "Largest branching angle, deg");
  s.add(sub, "--min-arm", "synthgen.min_arm", t.min_arm, "Shortest arm, px");
  s.add(sub, "--clearance", "synthgen.clearance", t.clearance, "Gap between unrelated arms, px");
  s.add(sub, "--canvas-width", "synthgen.canvas_width", t.canvas_width, "Canvas width, px");
  s.add(sub, "--canvas-height", "synthgen.canvas_height", t.canvas_height, "Canvas height, px");
  s.add(sub, "--root-x", "synthgen.root_x", t.root_x, "Trunk start, fraction of the width");
  s.add(sub, "--max-retries", "synthgen.max_retries", t.max_retries, "Redraws per arm");
  s.add(sub, "--max-restarts", "synthgen.max_restarts", t.max_restarts, "Whole-tree restarts");

  r.bodies[sub] = [st](Context&, Manifest& m) {
    validated("synthgen", [&] { st->spec.validate(); });
    const SynthTruth truth = generate(st->spec);
    const fs::path dir = st->out_dir;
    fs::create_directories(dir);
    io::write_png_mask(dir / "mask.png", truth.mask);
    io::write_png_mask(dir / "centerline.png", truth.centerline);
    io::write_png_labels(dir / "labels.png", truth.branch_labels);
    json branches = json::array();
    for (std::size_t b = 0; b < truth.branches.size(); ++b) {
      const Branch& br = truth.branches[b];
      json line = json::array();
      for (const Pixel& p : br.pixels) line.push_back({p.y, p.x});
      branches.push_back({{"label", b + 1},
                          {"level", br.level},
                          {"parent", br.parent},
                          {"width", br.width},
                          {"length", br.pixels.size()},
                          {"polyline", line}});
    }
    const json doc{{"schema", 1},
                   {"seed", truth.spec.seed},
                   {"spec", spec_json(truth.spec)},
                   {"n_branches", truth.n_branches},
                   {"redraws", truth.redraws},
                   {"restarts", truth.restarts},
                   {"branches", branches}};
    write_text(dir / "truth.json", doc.dump(2) + "\n");
    for (const char* f : {"mask.png", "centerline.png", "labels.png", "truth.json"})
      m.output(dir / f);
    m.results() = {{"n_branches", truth.n_branches},
                   {"mask_pixels", count(truth.mask)},
                   {"centerline_pixels", count(truth.centerline)}};
    return exit_ok;
  };
}

thread_local int selftest_depth = 0;

void add_selftest(CLI::App& app, Registry& r) {
  struct State {
    std::vector<int> only;
    std::string work_dir;
  };
  auto st = std::make_shared<State>();
  CLI::App* sub = app.add_subcommand("selftest", "Run the acceptance criteria");
  sub->add_option("--only", st->only, "Criterion ids, comma separated; default all")->delimiter(',');
  sub->add_option("--work-dir", st->work_dir, "Scratch directory for the determinism check");

  r.bodies[sub] = [st](Context& ctx, Manifest& m) {
    verify::AcceptanceOptions o;
    o.only = st->only;
    o.work_dir = st->work_dir;
    if (selftest_depth > 0) {
      // The determinism criterion reruns subcommands; it must not rerun itself.
      if (o.only.empty()) o.only = verify::criterion_ids();
      std::erase(o.only, 10);
    }
    o.runner = [](const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
      return run(args, out, err);
    };
    ++selftest_depth;
    std::vector<verify::CriterionResult> results;
    try {
      results = verify::run_acceptance(o, ctx.err, ctx.err);
    } catch (...) {
      --selftest_depth;
      throw;
    }
    --selftest_depth;
    json list = json::array();
    int failed = 0;
    for (const auto& c : results) {
      list.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      failed += !c.pass;
    }
    m.params()["only"] = o.only;
    m.results() = {{"criteria", list},
                   {"passed", static_cast<int>(results.size()) - failed},
                   {"failed", failed}};
    return failed ? exit_failed : exit_ok;
  };
}

int code_of(ErrorKind k) { return k == ErrorKind::io ? exit_io : exit_config; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-aware artery/vein segmentation toolkit", "avtopo"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Registry reg;
  Context ctx{out, err};
  std::string config_path;
  app.add_option("--config", config_path, "TOML config; sections mirror module names");
  reg.settings.add(&app, "--jobs", "jobs", ctx.jobs, "Worker threads for per-image work");

  add_preprocess(app, reg);
  add_cakebank(app, reg);
  add_orientation_scores(app, reg);
  add_skeleton(app, reg);
  add_geodist(app, reg);
  add_loss(app, reg);
  add_grad_check(app, reg);
  add_metrics(app, reg);
  add_roc(app, reg);
  add_synth(app, reg);
  add_selftest(app, reg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_config;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (!config_path.empty()) {
      require(fs::exists(config_path), ErrorKind::io, "missing config file: " + config_path);
      std::vector<CLI::ConfigItem> items;
      try {
        items = CLI::ConfigTOML().from_file(config_path);
      } catch (const CLI::ParseError& e) {
        fail(ErrorKind::parameter, "config: " + std::string(e.what()));
      }
      reg.settings.apply(items, active);
    }
    require(ctx.jobs >= 1, ErrorKind::parameter, "jobs must be >= 1");

    Manifest manifest(active->get_name());
    manifest.params() = reg.settings.values(active);
    const int code = reg.bodies.at(active)(ctx, manifest);
    out << manifest.dump();
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code_of(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace avtopo::cli
