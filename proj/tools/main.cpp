#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "tetipc/runner.hpp"

using namespace tetipc;

namespace {

int usage(std::ostream& os) {
  os << "usage:\n"
        "  tetipc run <scene.json> [overrides]\n"
        "  tetipc ablation <scene.json> [--steps N] [--variants dk,fr,prp] [overrides]\n"
        "  tetipc audit <scene.json> <frames_dir> [--brute] [overrides]\n"
        "\n"
        "overrides:\n"
        "  --h SEC           time step\n"
        "  --d-hat M         barrier activation distance (overrides d_hat_fraction)\n"
        "  --kappa K         barrier stiffness\n"
        "  --epsilon E       relative energy-decrease termination tolerance\n"
        "  --iter-max N      iteration cap per time step\n"
        "  --beta NAME       dk | fr | prp\n"
        "  --splitting NAME  off | object | collision\n"
        "  --frames N        frame count\n"
        "  --out DIR         output directory\n"
        "  --precision P     double | single\n"
        "  --deterministic   assert the reproducible code path (default behavior)\n"
        "  --threads N       worker pool size for data-parallel loops\n"
        "  --brute           exhaustive audit broad phase (default: spatial hash)\n"
        "  --no-frames       skip frame OBJ output\n"
        "  --quiet           suppress per-frame lines\n"
        "\n"
        "exit codes: 0 success, 2 scene/config error, 3 solver abort, 4 penetration\n";
  return 2;
}

struct Options {
  std::string scene;
  std::string frames_dir;
  std::string precision = "double";
  std::string variants = "dk,fr,prp";
  int steps = 50;
  int threads = 0;
  bool brute = false;
  bool no_frames = false;
  bool quiet = false;
  bool deterministic = false;
  std::vector<std::pair<std::string, std::string>> overrides;
};

double parse_num(const std::string& flag, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw SceneError(flag + " expects a number, got '" + v + "'");
  }
}

int parse_int_flag(const std::string& flag, const std::string& v) {
  const double d = parse_num(flag, v);
  const int i = static_cast<int>(d);
  if (double(i) != d) throw SceneError(flag + " expects an integer, got '" + v + "'");
  return i;
}

Options parse_args(int argc, char** argv, int first, bool wants_frames_dir) {
  Options o;
  int positional = 0;
  for (int i = first; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw SceneError(a + " expects a value");
      return argv[++i];
    };
    if (a.rfind("--", 0) != 0) {
      if (positional == 0)
        o.scene = a;
      else if (positional == 1 && wants_frames_dir)
        o.frames_dir = a;
      else
        throw SceneError("unexpected argument '" + a + "'");
      ++positional;
    } else if (a == "--h" || a == "--d-hat" || a == "--kappa" || a == "--epsilon" ||
               a == "--iter-max" || a == "--beta" || a == "--splitting" || a == "--frames" ||
               a == "--out") {
      o.overrides.emplace_back(a, next());
    } else if (a == "--precision") {
      o.precision = next();
      if (o.precision != "double" && o.precision != "single")
        throw SceneError("--precision must be 'double' or 'single'");
    } else if (a == "--steps") {
      o.steps = parse_int_flag(a, next());
      if (o.steps < 1) throw SceneError("--steps must be positive");
    } else if (a == "--variants") {
      o.variants = next();
    } else if (a == "--threads") {
      o.threads = parse_int_flag(a, next());
      if (o.threads < 0) throw SceneError("--threads must be non-negative");
    } else if (a == "--deterministic") {
      o.deterministic = true;
    } else if (a == "--brute") {
      o.brute = true;
    } else if (a == "--no-frames") {
      o.no_frames = true;
    } else if (a == "--quiet") {
      o.quiet = true;
    } else {
      throw SceneError("unknown flag '" + a + "'");
    }
  }
  if (o.scene.empty()) throw SceneError("missing scene file argument");
  if (wants_frames_dir && o.frames_dir.empty())
    throw SceneError("missing frames directory argument");
  return o;
}

void apply_overrides(SceneSpec& spec, const Options& o) {
  for (const auto& [flag, v] : o.overrides) {
    if (flag == "--h") {
      spec.h = parse_num(flag, v);
      if (spec.h <= 0) throw SceneError("--h must be positive");
    } else if (flag == "--d-hat") {
      spec.d_hat = parse_num(flag, v);
      if (spec.d_hat <= 0) throw SceneError("--d-hat must be positive");
    } else if (flag == "--kappa") {
      spec.kappa = parse_num(flag, v);
    } else if (flag == "--epsilon") {
      spec.epsilon = parse_num(flag, v);
    } else if (flag == "--iter-max") {
      spec.iter_max = parse_int_flag(flag, v);
    } else if (flag == "--beta") {
      spec.beta = beta_variant_from_string(v);
    } else if (flag == "--splitting") {
      spec.splitting = splitting_from_string(v);
    } else if (flag == "--frames") {
      spec.frames = parse_int_flag(flag, v);
      if (spec.frames < 1) throw SceneError("--frames must be positive");
    } else if (flag == "--out") {
      spec.out_dir = v;
    }
  }
}

RunOptions run_options(const Options& o) {
  RunOptions opt;
  opt.precision = o.precision == "single" ? 9 : 17;
  opt.deterministic = o.deterministic;
  opt.use_hash = !o.brute;
  opt.write_frames = !o.no_frames;
  opt.verbose = !o.quiet;
  return opt;
}

template <class T>
int do_run(const SceneSpec& spec, const RunOptions& opt) {
  const RunReport<T> rep = run_scene<T>(spec, opt);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "run complete: frames=%d avg_iters=%.2f contacts_avg=%.1f contacts_max=%d "
                "min_distance=%.6g wall=%.1fs\n",
                rep.frames_done, rep.avg_iterations, rep.contacts_avg, int(rep.contacts_max),
                double(rep.min_distance), rep.total_wall_ms / 1000.0);
  std::cout << buf;
  return 0;
}

template <class T>
int do_ablation(const SceneSpec& spec, const Options& o, const RunOptions& opt) {
  std::vector<BetaVariant> variants;
  std::string tok;
  std::istringstream vs(o.variants);
  while (std::getline(vs, tok, ',')) variants.push_back(beta_variant_from_string(tok));
  const AblationResult res = run_ablation<T>(spec, variants, o.steps, opt);
  for (size_t i = 0; i < res.variants.size(); ++i)
    std::cout << "mean iterations [" << res.variants[i] << "] = " << res.mean_iterations[i]
              << "\n";
  return 0;
}

template <class T>
int do_audit(const SceneSpec& spec, const Options& o, const RunOptions& opt) {
  const auto reports = audit_frames<T>(spec, o.frames_dir, !o.brute, opt);
  int bad = 0;
  for (const auto& r : reports) bad += r.penetrating();
  if (bad) {
    std::cout << "audit: " << bad << " of " << reports.size() << " frames penetrating\n";
    return 4;
  }
  std::cout << "audit: all " << reports.size() << " frames penetration-free\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(std::cerr);
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    usage(std::cout);
    return 0;
  }
  try {
    if (cmd != "run" && cmd != "ablation" && cmd != "audit")
      throw SceneError("unknown command '" + cmd + "'");
    const Options o = parse_args(argc, argv, 2, cmd == "audit");
    if (o.threads > 0) set_thread_count(o.threads);
    SceneSpec spec = load_scene_spec(o.scene);
    apply_overrides(spec, o);
    const RunOptions opt = run_options(o);
    if (cmd == "run")
      return o.precision == "single" ? do_run<float>(spec, opt) : do_run<double>(spec, opt);
    if (cmd == "ablation")
      return o.precision == "single" ? do_ablation<float>(spec, o, opt)
                                     : do_ablation<double>(spec, o, opt);
    return o.precision == "single" ? do_audit<float>(spec, o, opt)
                                   : do_audit<double>(spec, o, opt);
  } catch (const SceneError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MaterialFailure& e) {
    std::cerr << "solver abort: " << e.what() << "\n";
    return 3;
  } catch (const SolveAbort& e) {
    std::cerr << "solver abort: " << e.what() << "\n";
    return 3;
  } catch (const PenetrationFault& e) {
    std::cerr << "penetration: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
