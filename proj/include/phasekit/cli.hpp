#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasekit/blind_ptycho.hpp"
#include "phasekit/core.hpp"
#include "phasekit/holography.hpp"
#include "phasekit/masks_scans.hpp"
#include "phasekit/operators.hpp"
#include "phasekit/solvers.hpp"

namespace phasekit::cli {

// ---------------------------------------------------------------------------
// Config text
//
//   file    := { line '\n' }
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') any
//   section := '[' name ']'
//   entry   := name '=' value
//   name    := [a-z0-9_]+
//
// Whitespace around names and values is ignored; values run to the end of the
// line and may not be empty. Entries before the first section header belong
// to section "run". A repeated section header continues that section; a
// repeated key is an error.

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0);
  int line() const { return line_; }  // 0 when not tied to a line

 private:
  int line_;
};

// File access and image format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  // Throws IoError if the file cannot be read.
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  // Source line of an entry; 0 for defaults, overrides and missing keys.
  int line(const std::string& section, const std::string& key) const;
  // Sets or replaces a value (line 0); used for command-line overrides.
  void set(const std::string& section, const std::string& key, const std::string& value);

  // Typed reads. A missing key is recorded with its default, so the config
  // afterwards holds every value a run used. Conversion failures throw
  // ConfigError carrying the entry's line.
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  int get_int(const std::string& section, const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  // Comma-separated; items are trimmed and must be non-empty.
  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& fallback);
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback);

  // Throws ConfigError at the first entry that no read touched.
  void check_all_used() const;

  // Canonical text, sections and keys sorted; parse(to_text()) reproduces
  // every value.
  std::string to_text() const;
  std::map<std::string, std::map<std::string, std::string>> values() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };
  Entry* find(const std::string& section, const std::string& key);
  Entry& fetch(const std::string& section, const std::string& key, const std::string& fallback);

  std::map<std::string, std::map<std::string, Entry>> sections_;
};

// ---------------------------------------------------------------------------
// Image files: "PKIM", u32 width, u32 height, u32 dtype (1 = complex128),
// then width * height little-endian (re, im) doubles in row-major order.

inline constexpr std::uint32_t kComplex128 = 1;

void write_image(std::ostream& os, const ComplexImage& image);
void write_image(const std::filesystem::path& path, const ComplexImage& image);
// Throws IoError on a bad magic, dtype, truncated payload or
// trailing bytes.
ComplexImage read_image(std::istream& is);
ComplexImage read_image(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Phantoms

// Nonnegative Shepp-Logan head on an n x n grid, values in [0, 1].
ComplexImage shepp_logan(int n);
// Modulus of a nonnegative real image with i.i.d. phases uniform on
// [-pi r, pi r]. Throws unless the image is real, nonnegative and r >= 0.
ComplexImage random_phase_phantom(const ComplexImage& modulus, double phase_range,
                                  std::uint64_t seed);
// Four seeded Gaussian bumps, real, peak 1.
ComplexImage smooth_phantom(int n, std::uint64_t seed);
// Modulus uniform on [1/2, 1], phase uniform on [-pi r, pi r].
ComplexImage random_object(int n, double phase_range, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments

enum class SchemeKind { coded, ptycho };

struct ObjectSpec {
  std::string source = "phantom";  // phantom | file
  std::string phantom = "random";  // random | rpp | shepp_logan | smooth
  std::string file;                // source = file
  std::string modulus_file;        // rpp modulus; Shepp-Logan when empty
  int size = 32;
  double phase_range = 1.0;
};

struct MeasurementSpec {
  SchemeKind kind = SchemeKind::coded;
  int masks = 1;
  Sampling sampling = Sampling::oversampled;
  int mask_size = 16;
  ScanKind scan = ScanKind::raster;
  int steps = 4;  // scan positions per axis; must divide the object size
  int jitter = kDefaultJitter;
};

struct NoiseSpec {
  std::string model = "none";  // none | poisson
  double nsr = 0.0;            // expected NSR for poisson
};

struct HoloSpec {
  std::vector<HoloScheme> schemes{HoloScheme::pinhole, HoloScheme::slit, HoloScheme::block,
                                  HoloScheme::dual};
  std::vector<double> photons{1e8, 1e6, 1e4};
  int seeds = 5;
  int grid = 0;  // 0 means default_holo_grid(n)
};

struct CompareSpec {
  std::vector<std::string> methods{"spectral", "null", "optimal", "random"};
  int seeds = 10;
};

struct ExperimentConfig {
  ObjectSpec object;
  MeasurementSpec measurement;
  NoiseSpec noise;
  std::string init = "random";  // random | spectral | null | optimal
  std::string magnitudes_file;  // reconstruct: measured data instead of simulation
  SolverConfig solver;
  BlindConfig blind;
  double mpc_delta = 0.5;
  HoloSpec holo;
  CompareSpec compare;
  double gap_tol = 1e-12;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Reads every key (recording defaults), validates ranges and file existence,
// and rejects unknown keys. Bad values throw ConfigError; module
// precondition failures propagate unchanged as std::invalid_argument.
ExperimentConfig resolve(Config& config);

// Independent stream seeds derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Everything a run simulates from (config, seed).
struct Simulation {
  ComplexImage object;
  std::vector<ComplexImage> masks;  // coded: one per pattern; ptycho: the probe
  ScanPattern scan;                 // ptycho only
  RVector clean;                    // |A x|
  RVector magnitudes;               // clean or noisy
};

Simulation simulate(const ExperimentConfig& cfg);
// Operator with the simulation's known masks.
std::unique_ptr<MeasurementOperator> make_operator(const ExperimentConfig& cfg,
                                                   const Simulation& sim);

// Each command writes its files into cfg.out_dir (created if missing) and
// returns their names.
std::vector<std::string> cmd_simulate(const ExperimentConfig& cfg);
std::vector<std::string> cmd_reconstruct(const ExperimentConfig& cfg);
std::vector<std::string> cmd_blind(const ExperimentConfig& cfg);
std::vector<std::string> cmd_holo(const ExperimentConfig& cfg);
std::vector<std::string> cmd_init_compare(const ExperimentConfig& cfg);
std::vector<std::string> cmd_spectral_gap(const ExperimentConfig& cfg);

const std::vector<std::string>& command_names();

// Resolves the config, runs the named command and writes manifest.json
// (command, seed, jobs, resolved config, versions, outputs) plus
// resolved.cfg, which replays the run with `--config`.
std::vector<std::string> execute(const std::string& command, Config& config);

// One-line JSON error record and the matching process exit code:
// 2 config, 3 precondition, 4 I/O, 1 anything else.
struct ErrorReport {
  int exit_code;
  std::string json;
};
ErrorReport describe_error(const std::exception& e);

// CSV headers written by the commands.
inline constexpr const char* kInitCompareHeader = "method,seed,correlation,iterations";
inline constexpr const char* kSpectralGapHeader = "lambda2,lambda2_squared,optimal_rho";

}  // namespace phasekit::cli
