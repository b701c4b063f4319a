#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <thread>

#include <json.hpp>

#include "phasekit/cli.hpp"
#include "phasekit/init.hpp"
#include "phasekit/loss_noise.hpp"

#ifndef PHASEKIT_VERSION
#define PHASEKIT_VERSION "unknown"
#endif

namespace phasekit::cli {

namespace fs = std::filesystem;

namespace {

// Stream ids for derive_seed; fixed so outputs never depend on call order.
enum Stream : std::uint64_t {
  kObject = 1,
  kProbe = 2,
  kScan = 3,
  kNoise = 4,
  kInit = 5,
  kFrameOrder = 6,
  kMaskInit = 7,
  kObjectInit = 8,
  kCodedMasks = 100,  // + pattern index
};

// Rethrows a precondition failure of `what` as a config error at `key`.
template <class F>
auto at_key(const Config& cfg, const std::string& section, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section + "." + key + ": " + e.what(), cfg.line(section, key));
  }
}

void require(bool ok, const Config& cfg, const std::string& section, const std::string& key,
             const std::string& what) {
  if (!ok) throw ConfigError(section + "." + key + ": " + what, cfg.line(section, key));
}

template <class T>
T choose(const Config& cfg, const std::string& section, const std::string& key,
         const std::string& value, const std::vector<std::pair<std::string, T>>& options) {
  std::string names;
  for (const auto& [name, v] : options) {
    if (name == value) return v;
    names += (names.empty() ? "" : ", ") + name;
  }
  throw ConfigError(section + "." + key + ": unknown value '" + value + "' (expected " + names +
                        ")",
                    cfg.line(section, key));
}

const std::vector<std::string> kInitMethods{"random", "spectral", "null", "optimal"};

bool is_init_method(const std::string& m) {
  return std::find(kInitMethods.begin(), kInitMethods.end(), m) != kInitMethods.end();
}

ComplexImage as_image(const CVector& v, int rows, int cols) { return ComplexImage(rows, cols, v); }

// Magnitudes are stored as a 1 x N image with zero imaginary part.
ComplexImage magnitudes_image(const RVector& b) {
  return ComplexImage(1, int(b.size()), b.cast<cplx>());
}

RVector magnitudes_from_image(const ComplexImage& img) {
  if (img.height() != 1)
    throw std::invalid_argument("magnitudes file must be a 1 x N image");
  RVector b(img.size());
  for (Index k = 0; k < img.size(); ++k) {
    const cplx v = img.vec()[k];
    if (v.imag() != 0.0 || v.real() < 0.0)
      throw std::invalid_argument("magnitudes must be real and nonnegative");
    b[k] = v.real();
  }
  return b;
}

ComplexImage make_object(const ExperimentConfig& cfg) {
  const ObjectSpec& o = cfg.object;
  const std::uint64_t s = derive_seed(cfg.seed, kObject);
  if (o.source == "file") return read_image(o.file);
  if (o.phantom == "random") return random_object(o.size, o.phase_range, s);
  if (o.phantom == "smooth") return smooth_phantom(o.size, s);
  if (o.phantom == "shepp_logan") return shepp_logan(o.size);
  const ComplexImage modulus = o.modulus_file.empty() ? shepp_logan(o.size) : read_image(o.modulus_file);
  return random_phase_phantom(modulus, o.phase_range, s);
}

PtychoGeometry make_geometry(const ExperimentConfig& cfg, const Simulation& sim) {
  const int m = cfg.measurement.mask_size;
  return PtychoGeometry(sim.object.height(), sim.object.width(), m, m, sim.scan.shifts);
}

void require_square(const ComplexImage& x, const std::string& what) {
  if (x.height() != x.width()) throw std::invalid_argument(what + " needs a square object");
}

fs::path prepare_out(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

InitReport initialize(const std::string& method, const ExperimentConfig& cfg,
                      const MeasurementOperator& A, const RVector& b) {
  PowerOptions po;
  po.seed = derive_seed(cfg.seed, kInit);
  const RVector y = b.cwiseAbs2();
  if (method == "spectral") return spectral_init(A, y, po);
  if (method == "null")
    return null_init(A, b, default_null_set_size(A.object_size(), A.data_size()), po);
  if (method == "optimal")
    return optimal_preprocessing_init(A, y, double(A.data_size()) / double(A.object_size()), po);
  if (method == "random") return random_init(A.object_size(), b.norm(), po.seed);
  throw std::invalid_argument("unknown init method " + method);
}

// Runs body(i) for i in [0, count) on at most `jobs` threads. Results must
// go to per-index slots so the output order never depends on scheduling.
template <class F>
void parallel_for(int count, int jobs, F&& body) {
  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ExperimentConfig resolve(Config& c) {
  ExperimentConfig cfg;

  cfg.seed = c.get_u64("run", "seed", 0);
  cfg.jobs = c.get_int("run", "jobs", 1);
  require(cfg.jobs >= 1, c, "run", "jobs", "must be >= 1");
  cfg.out_dir = c.get_string("run", "out", "out");

  ObjectSpec& o = cfg.object;
  o.source = c.get_string("object", "source", "phantom");
  choose<int>(c, "object", "source", o.source, {{"phantom", 0}, {"file", 1}});
  o.phantom = c.get_string("object", "phantom", "random");
  choose<int>(c, "object", "phantom", o.phantom,
              {{"random", 0}, {"rpp", 1}, {"shepp_logan", 2}, {"smooth", 3}});
  o.file = c.get_string("object", "file", "-");
  o.modulus_file = c.get_string("object", "modulus_file", "-");
  if (o.file == "-") o.file.clear();
  if (o.modulus_file == "-") o.modulus_file.clear();
  o.size = c.get_int("object", "size", 32);
  o.phase_range = c.get_double("object", "phase_range", 1.0);
  require(o.size >= 1, c, "object", "size", "must be >= 1");
  require(o.phase_range >= 0.0 && std::isfinite(o.phase_range), c, "object", "phase_range",
          "must be finite and >= 0");
  if (o.source == "file") {
    require(!o.file.empty(), c, "object", "file", "required when source = file");
    require(fs::exists(o.file), c, "object", "file", "no such file '" + o.file + "'");
  }
  if (!o.modulus_file.empty())
    require(fs::exists(o.modulus_file), c, "object", "modulus_file",
            "no such file '" + o.modulus_file + "'");

  MeasurementSpec& m = cfg.measurement;
  m.kind = choose<SchemeKind>(c, "measurement", "scheme",
                              c.get_string("measurement", "scheme", "coded"),
                              {{"coded", SchemeKind::coded}, {"ptycho", SchemeKind::ptycho}});
  m.masks = c.get_int("measurement", "masks", 1);
  m.sampling = choose<Sampling>(c, "measurement", "sampling",
                                c.get_string("measurement", "sampling", "oversampled"),
                                {{"oversampled", Sampling::oversampled},
                                 {"standard", Sampling::standard}});
  m.mask_size = c.get_int("measurement", "mask_size", 16);
  m.scan = choose<ScanKind>(c, "measurement", "scan", c.get_string("measurement", "scan", "raster"),
                            {{"raster", ScanKind::raster},
                             {"rank1", ScanKind::perturbed_rank1},
                             {"fullrank", ScanKind::perturbed_fullrank}});
  m.steps = c.get_int("measurement", "steps", 4);
  m.jitter = c.get_int("measurement", "jitter", kDefaultJitter);
  require(m.masks >= 1, c, "measurement", "masks", "must be >= 1");
  require(m.mask_size >= 1, c, "measurement", "mask_size", "must be >= 1");
  require(m.steps >= 1, c, "measurement", "steps", "must be >= 1");
  require(m.jitter >= 0, c, "measurement", "jitter", "must be >= 0");
  if (m.kind == SchemeKind::ptycho && o.source == "phantom") {
    require(m.mask_size <= o.size, c, "measurement", "mask_size", "exceeds the object size");
    require(o.size % m.steps == 0, c, "measurement", "steps", "must divide the object size");
  }

  NoiseSpec& nz = cfg.noise;
  nz.model = c.get_string("noise", "model", "none");
  choose<int>(c, "noise", "model", nz.model, {{"none", 0}, {"poisson", 1}});
  nz.nsr = c.get_double("noise", "nsr", 0.0);
  require(nz.nsr >= 0.0 && std::isfinite(nz.nsr), c, "noise", "nsr", "must be finite and >= 0");
  require(nz.model == "none" || nz.nsr > 0.0, c, "noise", "nsr", "must be > 0 for poisson noise");

  cfg.init = c.get_string("init", "method", "random");
  require(is_init_method(cfg.init), c, "init", "method", "unknown value '" + cfg.init + "'");

  cfg.magnitudes_file = c.get_string("data", "magnitudes", "-");
  if (cfg.magnitudes_file == "-") cfg.magnitudes_file.clear();
  if (!cfg.magnitudes_file.empty())
    require(fs::exists(cfg.magnitudes_file), c, "data", "magnitudes",
            "no such file '" + cfg.magnitudes_file + "'");

  SolverConfig& s = cfg.solver;
  s.algorithm = at_key(c, "solver", "algorithm",
                       [&] { return parse_algorithm(c.get_string("solver", "algorithm", "aar")); });
  s.beta = c.get_double("solver", "beta", 0.8);
  s.rho = c.get_double("solver", "rho", 1.0);
  s.step = c.get_double("solver", "step", 0.2);
  s.max_iters = c.get_int("solver", "iters", 300);
  s.tolerance = c.get_double("solver", "tolerance", 0.0);
  s.ap_handoff_iters = c.get_int("solver", "ap_handoff", 0);
  s.stagnation_window = c.get_int("solver", "stagnation_window", 50);
  s.stagnation_tol = c.get_double("solver", "stagnation_tol", 1e-12);
  s.record_time = c.get_bool("solver", "record_time", true);
  s.seed = cfg.seed;
  s.validate();

  BlindConfig& bc = cfg.blind;
  bc.method = at_key(c, "blind", "method", [&] {
    return parse_blind_method(c.get_string("blind", "method", "two_loop"));
  });
  bc.inner = choose<InnerMap>(c, "blind", "inner", c.get_string("blind", "inner", "gaussian_drs"),
                              {{"raar", InnerMap::raar},
                               {"gaussian_drs", InnerMap::gaussian_drs},
                               {"poisson_drs", InnerMap::poisson_drs}});
  bc.beta = c.get_double("blind", "beta", 0.8);
  bc.rho = c.get_double("blind", "rho", 1.0);
  bc.inner_iters = c.get_int("blind", "inner_iters", 10);
  bc.mask_iters = c.get_int("blind", "mask_iters", 10);
  bc.max_epochs = c.get_int("blind", "epochs", 150);
  bc.tolerance = c.get_double("blind", "tolerance", 0.0);
  bc.stagnation_window = c.get_int("blind", "stagnation_window", 20);
  bc.stagnation_tol = c.get_double("blind", "stagnation_tol", 1e-12);
  bc.record_time = c.get_bool("blind", "record_time", true);
  bc.seed = derive_seed(cfg.seed, kFrameOrder);
  bc.validate();
  cfg.mpc_delta = c.get_double("blind", "mpc_delta", 0.5);
  require(cfg.mpc_delta > 0.0 && cfg.mpc_delta <= 0.5, c, "blind", "mpc_delta",
          "must lie in (0, 1/2]");

  HoloSpec& h = cfg.holo;
  h.schemes.clear();
  for (const std::string& name : c.get_list("holo", "schemes", {"pinhole", "slit", "block", "dual"}))
    h.schemes.push_back(at_key(c, "holo", "schemes", [&] { return parse_holo_scheme(name); }));
  h.photons = c.get_doubles("holo", "photons", {1e8, 1e6, 1e4});
  for (double p : h.photons)
    require(p > 0.0 && std::isfinite(p), c, "holo", "photons", "budgets must be finite and > 0");
  h.seeds = c.get_int("holo", "seeds", 5);
  h.grid = c.get_int("holo", "grid", 0);
  require(h.seeds >= 1, c, "holo", "seeds", "must be >= 1");
  require(h.grid >= 0, c, "holo", "grid", "must be >= 0");

  CompareSpec& cs = cfg.compare;
  cs.methods = c.get_list("compare", "methods", {"spectral", "null", "optimal", "random"});
  for (const std::string& method : cs.methods)
    require(is_init_method(method), c, "compare", "methods", "unknown method '" + method + "'");
  cs.seeds = c.get_int("compare", "seeds", 10);
  require(cs.seeds >= 1, c, "compare", "seeds", "must be >= 1");

  cfg.gap_tol = c.get_double("gap", "tolerance", 1e-12);
  require(cfg.gap_tol > 0.0, c, "gap", "tolerance", "must be > 0");

  c.check_all_used();
  return cfg;
}

Simulation simulate(const ExperimentConfig& cfg) {
  Simulation sim;
  sim.object = make_object(cfg);
  const MeasurementSpec& m = cfg.measurement;
  if (m.kind == SchemeKind::coded) {
    for (int k = 0; k < m.masks; ++k)
      sim.masks.push_back(random_phase_mask(sim.object.height(), sim.object.width(),
                                            derive_seed(cfg.seed, kCodedMasks + k)));
  } else {
    require_square(sim.object, "ptychography");
    const int n = sim.object.height();
    if (n % m.steps != 0) throw std::invalid_argument("scan steps must divide the object size");
    const std::uint64_t s = derive_seed(cfg.seed, kScan);
    switch (m.scan) {
      case ScanKind::raster: sim.scan = raster_scan(n, m.steps); break;
      case ScanKind::perturbed_rank1: sim.scan = perturbed_rank1(n, m.steps, s, m.jitter); break;
      case ScanKind::perturbed_fullrank:
        sim.scan = perturbed_fullrank(n, m.steps, s, m.jitter);
        break;
    }
    sim.masks.push_back(random_phase_mask(m.mask_size, derive_seed(cfg.seed, kProbe)));
  }
  sim.clean = make_operator(cfg, sim)->forward(sim.object.vec()).cwiseAbs();
  sim.magnitudes = sim.clean;
  if (cfg.noise.model == "poisson")
    sim.magnitudes = apply_poisson_noise(sim.clean.cwiseAbs2(),
                                         poisson_scale_for_nsr(sim.clean, cfg.noise.nsr),
                                         derive_seed(cfg.seed, kNoise))
                         .values;
  return sim;
}

std::unique_ptr<MeasurementOperator> make_operator(const ExperimentConfig& cfg,
                                                   const Simulation& sim) {
  if (cfg.measurement.kind == SchemeKind::coded)
    return std::make_unique<CodedDiffractionOperator>(sim.object.height(), sim.object.width(),
                                                      sim.masks, cfg.measurement.sampling);
  return std::make_unique<PtychographicOperator>(make_geometry(cfg, sim), sim.masks.at(0));
}

std::vector<std::string> cmd_simulate(const ExperimentConfig& cfg) {
  const Simulation sim = simulate(cfg);
  const fs::path out = prepare_out(cfg);
  std::vector<std::string> files{"object.pkim", "magnitudes.pkim"};
  write_image(out / files[0], sim.object);
  write_image(out / files[1], magnitudes_image(sim.magnitudes));
  for (std::size_t k = 0; k < sim.masks.size(); ++k) {
    files.push_back("mask_" + std::to_string(k) + ".pkim");
    write_image(out / files.back(), sim.masks[k]);
  }
  if (cfg.measurement.kind == SchemeKind::ptycho) {
    files.push_back("scan.csv");
    std::ofstream os = open_text(out / files.back());
    write_scan_csv(os, sim.scan);
  }
  return files;
}

std::vector<std::string> cmd_reconstruct(const ExperimentConfig& cfg) {
  Simulation sim = simulate(cfg);
  const auto A = make_operator(cfg, sim);
  if (!cfg.magnitudes_file.empty()) {
    sim.magnitudes = magnitudes_from_image(read_image(cfg.magnitudes_file));
    if (sim.magnitudes.size() != A->data_size())
      throw std::invalid_argument("magnitudes file holds " + std::to_string(sim.magnitudes.size()) +
                                  " values, the scheme needs " + std::to_string(A->data_size()));
  }
  const InitReport init = initialize(cfg.init, cfg, *A, sim.magnitudes);
  const SolverResult r = run(cfg.solver, *A, sim.magnitudes, init.estimate, sim.object.vec());

  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_text(out / "trace.csv");
    r.trace.write_csv(os);
  }
  write_image(out / "estimate.pkim",
              as_image(r.estimate, sim.object.height(), sim.object.width()));
  write_image(out / "init.pkim", as_image(init.estimate, sim.object.height(), sim.object.width()));
  return {"trace.csv", "estimate.pkim", "init.pkim"};
}

std::vector<std::string> cmd_blind(const ExperimentConfig& cfg) {
  if (cfg.measurement.kind != SchemeKind::ptycho)
    throw std::invalid_argument("blind needs measurement.scheme = ptycho");
  const Simulation sim = simulate(cfg);
  const PtychoGeometry g = make_geometry(cfg, sim);
  const ComplexImage& mask = sim.masks.at(0);
  const ComplexImage mask0 =
      mpc_mask_init(mask, {cfg.mpc_delta, 0, 0, derive_seed(cfg.seed, kMaskInit)});
  const int n = sim.object.height();
  const ComplexImage object0 = as_image(
      random_init(Index(n) * n, sim.object.vec().norm(), derive_seed(cfg.seed, kObjectInit))
          .estimate,
      n, n);
  const BlindResult r = run_blind(cfg.blind, g, sim.magnitudes, make_blind_state(g, object0, mask0),
                                  BlindTruth{sim.object, mask});

  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_text(out / "blind_trace.csv");
    r.trace.write_csv(os);
  }
  write_image(out / "object.pkim", r.state.object);
  write_image(out / "mask.pkim", r.state.mask);
  return {"blind_trace.csv", "object.pkim", "mask.pkim"};
}

std::vector<std::string> cmd_holo(const ExperimentConfig& cfg) {
  const ComplexImage x = make_object(cfg);
  require_square(x, "holography");
  const int n = x.height();
  const int grid = cfg.holo.grid > 0 ? cfg.holo.grid : default_holo_grid(n);
  const std::vector<HoloScheme>& schemes = cfg.holo.schemes;

  // One worker per scheme; each sweep is independent of the others.
  std::vector<std::vector<HoloErrorRow>> rows(schemes.size());
  std::vector<ComplexImage> recoveries(schemes.size());
  parallel_for(int(schemes.size()), cfg.jobs, [&](int i) {
    recoveries[i] =
        holo_recover(measure_holo(holo_composite(x, schemes[i]), n, grid, grid), schemes[i]);
    rows[i] = holo_noise_sweep(x, {schemes[i]}, cfg.holo.photons, cfg.holo.seeds, cfg.seed, grid);
  });

  const fs::path out = prepare_out(cfg);
  std::vector<std::string> files{"holo_errors.csv"};
  {
    std::vector<HoloErrorRow> all;
    for (const auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    std::ofstream os = open_text(out / files[0]);
    write_holo_error_csv(os, all);
  }
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    files.push_back("recovery_" + to_string(schemes[i]) + ".pkim");
    write_image(out / files.back(), recoveries[i]);
  }
  return files;
}

std::vector<std::string> cmd_init_compare(const ExperimentConfig& cfg) {
  struct Row {
    std::string method;
    std::uint64_t seed;
    double correlation;
    int iterations;
  };
  const int seeds = cfg.compare.seeds;
  std::vector<std::vector<Row>> rows(seeds);
  parallel_for(seeds, cfg.jobs, [&](int i) {
    ExperimentConfig run = cfg;
    run.seed = cfg.seed + std::uint64_t(i);
    const Simulation sim = simulate(run);
    const auto A = make_operator(run, sim);
    for (const std::string& method : cfg.compare.methods) {
      const InitReport r = initialize(method, run, *A, sim.magnitudes);
      rows[i].push_back({method, run.seed, correlation(r.estimate, sim.object.vec()),
                         r.iterations});
    }
  });

  const fs::path out = prepare_out(cfg);
  std::ofstream os = open_text(out / "init_compare.csv");
  os << kInitCompareHeader << '\n' << std::setprecision(17);
  for (const auto& per_seed : rows)
    for (const Row& r : per_seed)
      os << r.method << ',' << r.seed << ',' << r.correlation << ',' << r.iterations << '\n';
  return {"init_compare.csv"};
}

std::vector<std::string> cmd_spectral_gap(const ExperimentConfig& cfg) {
  const Simulation sim = simulate(cfg);
  const auto A = make_operator(cfg, sim);
  GapOptions opts;
  opts.tol = cfg.gap_tol;
  opts.seed = derive_seed(cfg.seed, kInit);
  const double l2 = spectral_gap_lambda2(*A, sim.object.vec(), opts);

  const fs::path out = prepare_out(cfg);
  std::ofstream os = open_text(out / "spectral_gap.csv");
  os << kSpectralGapHeader << '\n'
     << std::setprecision(17) << l2 << ',' << l2 * l2 << ',' << optimal_rho(l2) << '\n';
  return {"spectral_gap.csv"};
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "reconstruct",  "blind",
                                              "holo",     "init-compare", "spectral-gap"};
  return names;
}

std::vector<std::string> execute(const std::string& command, Config& config) {
  using Command = std::vector<std::string> (*)(const ExperimentConfig&);
  static const std::map<std::string, Command> table{
      {"simulate", cmd_simulate},   {"reconstruct", cmd_reconstruct},
      {"blind", cmd_blind},         {"holo", cmd_holo},
      {"init-compare", cmd_init_compare}, {"spectral-gap", cmd_spectral_gap}};
  const auto it = table.find(command);
  if (it == table.end()) throw std::invalid_argument("unknown command " + command);

  const ExperimentConfig cfg = resolve(config);
  std::vector<std::string> files = it->second(cfg);

  const fs::path out = prepare_out(cfg);
  {
    std::ofstream os = open_text(out / "resolved.cfg");
    os << config.to_text();
  }
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["seed"] = cfg.seed;
  manifest["jobs"] = cfg.jobs;
  manifest["config"] = config.values();
  manifest["versions"]["phasekit"] = PHASEKIT_VERSION;
  manifest["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION);
  manifest["versions"]["fftw"] = std::string(fftw_version);
  manifest["versions"]["compiler"] = __VERSION__;
  files.push_back("resolved.cfg");
  files.push_back("manifest.json");
  manifest["outputs"] = files;
  std::ofstream os = open_text(out / "manifest.json");
  os << manifest.dump(2) << '\n';
  return files;
}

ErrorReport describe_error(const std::exception& e) {
  nlohmann::json err;
  err["message"] = e.what();
  int code = 1;
  std::string kind = "internal";
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    code = 2;
    kind = "config";
    if (ce->line() > 0) err["line"] = ce->line();
  } else if (dynamic_cast<const std::invalid_argument*>(&e) ||
             dynamic_cast<const std::out_of_range*>(&e) ||
             dynamic_cast<const std::domain_error*>(&e)) {
    code = 3;
    kind = "precondition";
  } else if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
    code = 4;
    kind = "io";
  }
  err["kind"] = kind;
  return {code, nlohmann::json{{"error", err}}.dump()};
}

}  // namespace phasekit::cli
