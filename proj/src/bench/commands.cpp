#include "orthodict/bench.hpp"

#include "orthodict/data.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace orthodict::bench {

using nlohmann::json;

namespace {

struct SignalOptions {
  std::vector<std::string> inputs;
  std::string signals;
  std::size_t m = 8192;
  std::size_t patch_edge = 8;
  std::string normalization = "unit-range";
};

struct RunOptions {
  std::uint64_t seed = 1;
  std::size_t workers = Executor::hardware_workers();
  std::size_t chunk_size = 256;
  std::string config;
};

struct SboOptions {
  std::size_t s0 = 8;
  std::size_t k0 = 5;
  std::size_t p0 = 4096;
  std::size_t rounds = 6;
  std::size_t worst = 0;
  std::size_t k_max = 64;
  double target_error = 0.0;
  std::string energy = "squared-sum";
};

struct AksvdOptions {
  std::size_t n = 128;
  std::size_t iterations = 100;
};

void add_signal_options(CLI::App& cmd, SignalOptions& o) {
  cmd.add_option("--input", o.inputs, "Netpbm image(s) to sample patches from")
      ->delimiter(',');
  cmd.add_option("--signals", o.signals, "ODM1 signal matrix (one signal per column)");
  cmd.add_option("--m", o.m, "Number of patches")->check(CLI::PositiveNumber);
  cmd.add_option("--patch-edge", o.patch_edge, "Patch edge in pixels (p = edge^2)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--normalization", o.normalization, "unit-range | unit-range-dc-removed");
}

void add_run_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--seed", o.seed, "Random seed");
  cmd.add_option("--workers", o.workers, "Worker threads")
      ->envname("ORTHODICT_WORKERS")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--chunk-size", o.chunk_size, "Signals per parallel work unit")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--config", o.config, "key=value file; command-line flags take precedence");
}

void add_sbo_options(CLI::App& cmd, SboOptions& o, bool with_kmax) {
  cmd.add_option("--s0", o.s0, "Sparsity level")->check(CLI::PositiveNumber);
  cmd.add_option("--k0", o.k0, "Initial block count");
  cmd.add_option("--p0", o.p0, "Signals per initial block");
  cmd.add_option("--r", o.rounds, "1ONB rounds per block training");
  cmd.add_option("--w", o.worst, "Worst-set size (0 = max(p, m/16))");
  if (with_kmax) cmd.add_option("--kmax", o.k_max, "Maximum number of blocks");
  cmd.add_option("--target-error", o.target_error, "Stop once RMSE <= this (0 disables)");
  cmd.add_option("--energy", o.energy, "squared-sum | abs-sum");
}

void add_aksvd_options(CLI::App& cmd, AksvdOptions& o, bool with_n) {
  if (with_n) cmd.add_option("--n", o.n, "Atoms in the overcomplete dictionary");
  cmd.add_option("--iters", o.iterations, "AK-SVD iterations");
}

SboConfig to_config(const SboOptions& o, const RunOptions& run) {
  SboConfig cfg;
  cfg.s0 = o.s0;
  cfg.k0 = o.k0;
  cfg.p0 = o.p0;
  cfg.rounds = o.rounds;
  cfg.worst_set = o.worst;
  cfg.k_max = o.k_max;
  cfg.target_error = o.target_error;
  cfg.energy = parse_energy_kind(o.energy);
  cfg.seed = run.seed;
  cfg.chunk_size = run.chunk_size;
  cfg.validate();
  return cfg;
}

AksvdConfig to_config(const AksvdOptions& o, std::size_t s0, const RunOptions& run) {
  AksvdConfig cfg;
  cfg.n = o.n;
  cfg.s0 = s0;
  cfg.iterations = o.iterations;
  cfg.seed = run.seed;
  cfg.chunk_size = run.chunk_size;
  return cfg;
}

Matrix load_signals(const SignalOptions& o, std::uint64_t seed) {
  if (!o.signals.empty() && !o.inputs.empty()) {
    throw ContractError("use either --signals or --input, not both");
  }
  if (!o.signals.empty()) return load_matrix(o.signals);
  if (o.inputs.empty()) throw ContractError("no signal source: pass --input or --signals");

  std::vector<GrayImage> images;
  for (const auto& path : o.inputs) images.push_back(load_image(path));
  PatchConfig cfg;
  cfg.patch_edge = o.patch_edge;
  cfg.count = o.m;
  cfg.seed = seed;
  cfg.normalization = parse_normalization(o.normalization);
  return extract_patches(images, cfg);
}

json signal_echo(const SignalOptions& o, const Matrix& y) {
  json j{{"p", y.rows()}, {"m", y.cols()}};
  if (!o.signals.empty()) {
    j["signals"] = o.signals;
  } else {
    j["inputs"] = o.inputs;
    j["patch_edge"] = o.patch_edge;
    j["normalization"] = o.normalization;
  }
  return j;
}

json to_json(const TrainReport& r) {
  json iterations = json::array();
  for (const auto& it : r.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"size", it.size},
                          {"rmse", it.rmse},
                          {"coding_rmse", it.coding_rmse},
                          {"learn_seconds", it.learn_seconds},
                          {"represent_seconds", it.represent_seconds},
                          {"idle", it.idle_blocks}});
  }
  return iterations;
}

std::string format_row(const std::string& algo, std::size_t param, double t_learn, double t_rep,
                       double rmse) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.12g", algo.c_str(), param, t_learn, t_rep,
                rmse);
  return buf;
}

// Inserts `--key value` pairs from a key=value file for every key not already
// present on the command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;

  std::ifstream in(*path);
  if (!in) throw ContractError("cannot open config file " + *path);
  auto on_command_line = [&](const std::string& key) {
    for (const auto& a : args) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    }
    return false;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  std::vector<std::string> merged{args.front()};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError(*path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config" || on_command_line(key)) continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct Evaluation {
  std::vector<std::int64_t> blocks;
  SparseColumns code;
  double t_rep = 0.0;
  double rmse = 0.0;
};

Evaluation evaluate(const MatrixView& y, const AnyDictionary& dictionary, std::size_t s0,
                    EnergyKind energy, std::size_t chunk_size, const Executor& exec) {
  Evaluation e;
  if (const auto* u = std::get_if<UnionDictionary>(&dictionary)) {
    Stopwatch watch;
    Representation rep = represent(y, *u, s0, energy, chunk_size, exec);
    e.t_rep = watch.seconds();
    e.rmse = rmse_from_error(frobenius_error(y, *u, rep.assignments, rep.code), y.rows(),
                             y.cols());
    e.blocks.reserve(rep.assignments.size());
    for (const auto& a : rep.assignments) e.blocks.push_back(a.block);
    e.code = std::move(rep.code);
  } else {
    const auto& d = std::get<OvercompleteDictionary>(dictionary);
    Stopwatch watch;
    BatchOmp coded = batch_omp(y, d, s0, chunk_size, exec);
    e.t_rep = watch.seconds();
    e.rmse = rmse_from_error(frobenius_error(y, d.atoms(), coded.codes), y.rows(), y.cols());
    e.blocks.assign(static_cast<std::size_t>(y.cols()), -1);
    e.code = std::move(coded.codes);
  }
  return e;
}

int cmd_train(const std::string& algo, const SignalOptions& sig, const RunOptions& run,
              const SboOptions& sbo_opts, const AksvdOptions& aksvd_opts,
              const std::string& out_dir, std::ostream& out) {
  if (algo != "sbo" && algo != "aksvd") throw ContractError("--algo must be sbo or aksvd");
  const Executor exec(run.workers);
  std::optional<SboConfig> sbo_cfg;
  std::optional<AksvdConfig> aksvd_cfg;
  if (algo == "sbo") sbo_cfg = to_config(sbo_opts, run);
  else aksvd_cfg = to_config(aksvd_opts, sbo_opts.s0, run);

  const Matrix y = load_signals(sig, run.seed);
  if (aksvd_cfg) aksvd_cfg->validate(y.rows());

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  DictionaryMeta meta{algo, y.rows(), 0, sbo_opts.s0, parse_energy_kind(sbo_opts.energy)};
  std::optional<AnyDictionary> dictionary;
  TrainReport report;
  json config;
  if (sbo_cfg) {
    SboResult r = sbo_train(y, *sbo_cfg, exec);
    meta.size = r.dictionary.size();
    report = std::move(r.report);
    dictionary.emplace(std::move(r.dictionary));
    config = {{"s0", sbo_cfg->s0},
              {"k0", sbo_cfg->k0},
              {"p0", sbo_cfg->p0},
              {"r", sbo_cfg->rounds},
              {"w", sbo_cfg->resolved_worst_set(y.rows(), y.cols())},
              {"kmax", sbo_cfg->k_max},
              {"target_error", sbo_cfg->target_error},
              {"energy", to_string(sbo_cfg->energy)}};
  } else {
    AksvdResult r = aksvd_train(y, *aksvd_cfg, exec);
    meta.size = aksvd_cfg->n;
    report = std::move(r.report);
    dictionary.emplace(std::move(r.dictionary));
    config = {{"n", aksvd_cfg->n}, {"s0", aksvd_cfg->s0}, {"iters", aksvd_cfg->iterations}};
  }
  config["seed"] = run.seed;
  config["workers"] = run.workers;
  config["chunk_size"] = run.chunk_size;

  const Evaluation final_pass =
      evaluate(y, *dictionary, meta.s0, meta.energy, run.chunk_size, exec);

  const auto dict_path = dir / "dict.odm";
  const auto codes_path = dir / "codes.odm";
  save_dictionary(dict_path, *dictionary, meta);
  save_matrix(codes_path, encode_codes(final_pass.blocks, final_pass.code));

  const StoredDictionary stored = load_dictionary(dict_path);
  const Index coefficient_rows =
      algo == "sbo" ? y.rows() : static_cast<Index>(meta.size);
  const StoredCodes codes = decode_codes(load_matrix(codes_path), coefficient_rows);
  const double rmse = rmse_from_error(stored_error(y, stored, codes), y.rows(), y.cols());

  json doc{{"algo", algo},
           {"config", config},
           {"seed", run.seed},
           {"workers", run.workers},
           {"signals", signal_echo(sig, y)},
           {"iterations", to_json(report)},
           {"t_init", report.init_seconds},
           {"t_learn", report.learn_seconds},
           {"t_rep", final_pass.t_rep},
           {"rmse", rmse},
           {"rmse_final_pass", final_pass.rmse},
           {"rmse_loop", report.final_rmse()},
           {"final_size", meta.size},
           {"max_orthonormality_defect", report.max_orthonormality_defect},
           {"blocks_audited", report.blocks_audited},
           {"warnings", report.warnings}};
  write_text(dir / "report.json", doc.dump(2) + "\n");

  out << algo << ": size=" << meta.size << " rmse=" << rmse << " t_learn=" << report.learn_seconds
      << "s t_rep=" << final_pass.t_rep << "s -> " << dir.string() << "\n";
  return kOk;
}

int cmd_represent(const std::string& dict_path, const SignalOptions& sig, const RunOptions& run,
                  std::size_t s0_override, const std::string& energy_override,
                  const std::string& codes_out, const std::string& report_out,
                  std::ostream& out) {
  const StoredDictionary stored = load_dictionary(dict_path);
  const Matrix y = load_signals(sig, run.seed);
  if (y.rows() != stored.meta.p) {
    throw ContractError("signal dimension " + std::to_string(y.rows()) +
                        " does not match dictionary dimension " + std::to_string(stored.meta.p));
  }
  const std::size_t s0 = s0_override > 0 ? s0_override : stored.meta.s0;
  const EnergyKind energy =
      energy_override.empty() ? stored.meta.energy : parse_energy_kind(energy_override);

  const Executor exec(run.workers);
  const Evaluation e = evaluate(y, stored.dictionary, s0, energy, run.chunk_size, exec);
  if (!codes_out.empty()) save_matrix(codes_out, encode_codes(e.blocks, e.code));

  const json doc{{"algo", stored.meta.algo},
                 {"size", stored.meta.size},
                 {"p", y.rows()},
                 {"m", y.cols()},
                 {"s0", s0},
                 {"energy", to_string(energy)},
                 {"workers", run.workers},
                 {"t_rep", e.t_rep},
                 {"rmse", e.rmse}};
  if (!report_out.empty()) write_text(report_out, doc.dump(2) + "\n");
  out << doc.dump() << "\n";
  return kOk;
}

int cmd_compare(const std::vector<std::size_t>& kmax_list, const std::vector<std::size_t>& n_list,
                const SignalOptions& sig, const RunOptions& run, const SboOptions& sbo_opts,
                const AksvdOptions& aksvd_opts, const std::string& out_path, std::ostream& out) {
  if (kmax_list.empty() && n_list.empty()) {
    throw ContractError("empty sweep: pass --kmax-list and/or --n-list");
  }
  std::vector<SboConfig> sbo_runs;
  for (std::size_t k : kmax_list) {
    SboOptions o = sbo_opts;
    o.k_max = k;
    sbo_runs.push_back(to_config(o, run));
  }
  std::vector<AksvdConfig> aksvd_runs;
  for (std::size_t n : n_list) {
    AksvdOptions o = aksvd_opts;
    o.n = n;
    aksvd_runs.push_back(to_config(o, sbo_opts.s0, run));
  }

  const Matrix y = load_signals(sig, run.seed);
  for (const auto& cfg : aksvd_runs) cfg.validate(y.rows());
  const Executor exec(run.workers);

  std::ostringstream csv;
  csv << "algo,param,t_learn,t_rep,rmse\n";
  for (const auto& cfg : sbo_runs) {
    SboResult r = sbo_train(y, cfg, exec);
    const AnyDictionary d = std::move(r.dictionary);
    const Evaluation e = evaluate(y, d, cfg.s0, cfg.energy, cfg.chunk_size, exec);
    csv << format_row("sbo", cfg.k_max, r.report.learn_seconds, e.t_rep, e.rmse) << "\n";
  }
  for (const auto& cfg : aksvd_runs) {
    AksvdResult r = aksvd_train(y, cfg, exec);
    const AnyDictionary d = std::move(r.dictionary);
    const Evaluation e = evaluate(y, d, cfg.s0, EnergyKind::squared_sum, cfg.chunk_size, exec);
    csv << format_row("aksvd", cfg.n, r.report.learn_seconds, e.t_rep, e.rmse) << "\n";
  }

  if (out_path.empty()) {
    out << csv.str();
  } else {
    const std::filesystem::path path(out_path);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_text(path, csv.str());
    out << "wrote " << (sbo_runs.size() + aksvd_runs.size()) << " rows to " << out_path << "\n";
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Union-of-orthonormal-bases dictionary learning benchmarks", "orthodict"};
  app.require_subcommand(1);

  SignalOptions sig;
  RunOptions run;
  SboOptions sbo_opts;
  AksvdOptions aksvd_opts;

  std::string algo = "sbo";
  std::string out_dir;
  auto* train = app.add_subcommand("train", "Train a dictionary and write report.json, dict.odm, codes.odm");
  train->add_option("--algo", algo, "sbo | aksvd");
  train->add_option("--out", out_dir, "Output directory")->required();
  add_signal_options(*train, sig);
  add_run_options(*train, run);
  add_sbo_options(*train, sbo_opts, true);
  add_aksvd_options(*train, aksvd_opts, true);

  std::string dict_path, codes_out, report_out, energy_override;
  std::size_t s0_override = 0;
  auto* rep = app.add_subcommand("represent", "Represent signals with a stored dictionary");
  rep->add_option("--dict", dict_path, "Dictionary file (dict.odm)")->required();
  rep->add_option("--s0", s0_override, "Sparsity level (default: from the dictionary header)");
  rep->add_option("--energy", energy_override, "Energy kind (default: from the dictionary header)");
  rep->add_option("--codes-out", codes_out, "Write codes as ODM1");
  rep->add_option("--report", report_out, "Write the JSON summary to a file");
  add_signal_options(*rep, sig);
  add_run_options(*rep, run);

  std::vector<std::size_t> kmax_list, n_list;
  std::string csv_out;
  auto* cmp = app.add_subcommand("compare", "Sweep SBO over K_max and/or AK-SVD over n; emit CSV");
  cmp->add_option("--kmax-list", kmax_list, "Comma-separated K_max values")->delimiter(',');
  cmp->add_option("--n-list", n_list, "Comma-separated atom counts")->delimiter(',');
  cmp->add_option("--out", csv_out, "CSV path (stdout when omitted)");
  add_signal_options(*cmp, sig);
  add_run_options(*cmp, run);
  add_sbo_options(*cmp, sbo_opts, false);
  add_aksvd_options(*cmp, aksvd_opts, false);

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (train->parsed()) {
      return cmd_train(algo, sig, run, sbo_opts, aksvd_opts, out_dir, out);
    }
    if (rep->parsed()) {
      return cmd_represent(dict_path, sig, run, s0_override, energy_override, codes_out,
                           report_out, out);
    }
    return cmd_compare(kmax_list, n_list, sig, run, sbo_opts, aksvd_opts, csv_out, out);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DecompositionError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace orthodict::bench
