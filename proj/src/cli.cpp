#include "cgra/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

namespace cgra {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string kernel_label(const RunSpec& s, const KernelProgram& k) {
  return s.kernel_file.empty() ? k.name : std::filesystem::path(s.kernel_file).stem().string();
}

void builtin_flags(std::ostream& os, const RunSpec& s) {
  const auto& p = s.params;
  if (s.builtin == "gather") {
    if (!p.edge_list.empty()) os << " --edge-list " << p.edge_list;
    else os << " --edges " << p.edges;
    os << " --nodes " << p.nodes << " --feature-len " << p.feature_len;
  } else if (s.builtin == "pattern") {
    os << " --pattern " << pattern_name(p.pattern) << " --length " << p.length << " --footprint " << p.footprint
       << " --stride " << p.stride;
  } else if (s.builtin == "mix" || s.builtin == "quad") {
    os << " --length " << p.length << " --footprint " << p.footprint;
  } else {
    os << " --length " << p.length;
  }
}

}  // namespace

std::string default_out_dir() {
  const char* d = std::getenv("CGRASIM_OUT_DIR");
  return d && *d ? d : ".";
}

KernelProgram resolve_kernel(const RunSpec& spec) {
  if (!spec.kernel_file.empty()) return load_kernel_file(spec.kernel_file);
  BuiltinParams p = spec.params;
  p.seed = spec.seed;
  return make_builtin(spec.builtin, p);
}

SimOptions resolve_options(const RunSpec& spec) {
  SimOptions o;
  o.variant = spec.variant;
  o.hw = preset_config(spec.preset);
  if (!spec.config_file.empty()) {
    // The file may name its own preset; explicit --preset still wins for the base.
    HierarchyConfig from_file = parse_config("preset=" + spec.preset + "\n" + read_file(spec.config_file));
    o.hw = from_file;
  }
  for (const auto& [k, v] : spec.overrides) apply_setting(o.hw, k, v);
  o.hw.validate();
  o.reconfig = spec.reconfig;
  o.cycle_cap = spec.cycle_cap;
  return o;
}

RunStats execute(const RunSpec& spec, const std::string& run_id) {
  const KernelProgram k = resolve_kernel(spec);
  const SimOptions o = resolve_options(spec);
  RunStats s = simulate(k, o).stats;
  s.kernel = kernel_label(spec, k);
  s.variant = std::string(variant_name(spec.variant));
  s.seed = spec.seed;
  s.run_id = run_id.empty() ? s.kernel + "-" + s.variant + "-s" + std::to_string(spec.seed) : run_id;
  return s;
}

std::string repro_line(const RunSpec& s) {
  std::ostringstream os;
  os << "cgrasim run";
  if (!s.kernel_file.empty()) {
    os << " --kernel " << s.kernel_file;
  } else {
    os << " --builtin " << s.builtin;
    builtin_flags(os, s);
  }
  os << " --preset " << s.preset;
  if (!s.config_file.empty()) os << " --config " << s.config_file;
  for (const auto& [k, v] : s.overrides) os << " --set " << k << "=" << v;
  os << " --variant " << variant_name(s.variant) << " --seed " << s.seed << " --cycles-max " << s.cycle_cap;
  if (s.variant == Variant::Reconfig)
    os << " --window " << s.reconfig.window << " --threshold " << s.reconfig.threshold;
  os << "\nhw: " << resolve_options(s).hw.describe();
  return os.str();
}

std::string sweep_key(const std::string& param) {
  static const std::map<std::string, std::string> keys = {
      {"assoc", "l1_ways"}, {"line", "l1_line"}, {"size", "l1_size"}, {"mshr", "mshr"}, {"spm", "spm_bytes"}};
  auto it = keys.find(param);
  if (it == keys.end()) throw ConfigError("unknown sweep parameter '" + param + "' (assoc|line|size|mshr|spm)");
  return it->second;
}

std::vector<RunStats> sweep(const RunSpec& base, const std::string& param,
                            const std::vector<std::uint32_t>& values) {
  const std::string key = sweep_key(param);
  // Reject bad values before spending time on any run.
  for (auto v : values) {
    RunSpec probe = base;
    probe.overrides.emplace_back(key, std::to_string(v));
    try {
      resolve_options(probe);
    } catch (const Error& e) {
      throw ConfigError("invalid " + param + " value " + std::to_string(v) + ": " + e.what());
    }
  }
  std::vector<RunStats> out;
  for (auto v : values) {
    RunSpec s = base;
    s.overrides.emplace_back(key, std::to_string(v));
    RunStats r = execute(s);
    r.run_id += "-" + param + "=" + std::to_string(v);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CompareRow> compare(const RunSpec& base, const std::vector<std::string>& kernels) {
  constexpr Variant kAll[] = {Variant::SpmOnly, Variant::Cache, Variant::Runahead, Variant::Reconfig};
  std::vector<CompareRow> rows;
  for (const auto& entry : kernels) {
    RunSpec s = base;
    s.kernel_file.clear();
    if (std::filesystem::exists(entry)) {
      s.kernel_file = entry;
    } else if (auto colon = entry.find(':'); colon != std::string::npos) {
      s.builtin = entry.substr(0, colon);
      s.params.pattern = parse_pattern(entry.substr(colon + 1));
    } else {
      s.builtin = entry;
    }
    std::optional<RunStats> results[4];
    std::string errors[4];
    for (int i = 0; i < 4; ++i) {
      s.variant = kAll[i];
      try {
        results[i] = execute(s);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
    for (int i = 0; i < 4; ++i) {
      CompareRow r;
      r.kernel = entry;
      r.variant = std::string(variant_name(kAll[i]));
      if (!results[i]) {
        r.status = "failed: " + errors[i];
      } else {
        r.cycles = results[i]->total_cycles;
        r.status = "ok";
        auto ratio = [&](int b, std::string& field) {
          if (!results[b]) return;
          try {
            field = format_fixed(speedup(*results[b], *results[i]), 4);
          } catch (const ValidationError&) {
            r.status = "digest-mismatch";
          }
        };
        ratio(0, r.speedup_vs_spm_only);
        ratio(1, r.speedup_vs_cache);
      }
      for (char& c : r.status)
        if (c == ',' || c == '\n') c = ';';
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::string format_compare(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << "kernel,variant,cycles,speedup_vs_spm_only,speedup_vs_cache,status\n";
  for (const auto& r : rows)
    os << r.kernel << "," << r.variant << "," << r.cycles << "," << r.speedup_vs_spm_only << ","
       << r.speedup_vs_cache << "," << r.status << "\n";
  return os.str();
}

namespace {

struct Flags {
  RunSpec spec;
  std::string variant = "cache";
  std::string pattern = "linear";
  std::string out;
  std::optional<std::uint32_t> l1_ways, l1_line, l1_size, mshr, spm_size;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f, bool with_variant) {
  auto& s = f.spec;
  auto* kernel = cmd->add_option("--kernel", s.kernel_file, "kernel description file")->check(CLI::ExistingFile);
  cmd->add_option("--builtin", s.builtin, "builtin kernel name")
      ->check(CLI::IsMember(builtin_names()))
      ->excludes(kernel);
  cmd->add_option("--preset", s.preset, "hardware preset")
      ->check(CLI::IsMember({"base", "runahead", "reconfig"}));
  if (with_variant)
    cmd->add_option("--variant", f.variant, "memory-system variant")
        ->check(CLI::IsMember({"spm-only", "cache", "runahead", "reconfig"}));
  cmd->add_option("--seed", s.seed, "root seed");
  cmd->add_option("--cycles-max", s.cycle_cap, "deadlock guard")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output CSV path");
  cmd->add_option("--config", s.config_file, "key=value hardware config")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "extra key=value hardware setting");
  cmd->add_option("--l1-ways", f.l1_ways);
  cmd->add_option("--l1-line", f.l1_line);
  cmd->add_option("--l1-size", f.l1_size);
  cmd->add_option("--mshr", f.mshr);
  cmd->add_option("--spm-size", f.spm_size);
  cmd->add_option("--window", s.reconfig.window, "reconfiguration window (cycles)")->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", s.reconfig.threshold, "time-miss-rate trigger")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--edges", s.params.edges);
  cmd->add_option("--nodes", s.params.nodes);
  cmd->add_option("--feature-len", s.params.feature_len);
  cmd->add_option("--edge-list", s.params.edge_list)->check(CLI::ExistingFile);
  cmd->add_option("--pattern", f.pattern);
  cmd->add_option("--length", s.params.length);
  cmd->add_option("--footprint", s.params.footprint);
  cmd->add_option("--stride", s.params.stride);
}

void finalize(Flags& f) {
  auto& s = f.spec;
  s.variant = parse_variant(f.variant);
  s.params.pattern = parse_pattern(f.pattern);
  auto put = [&](const char* key, const std::optional<std::uint32_t>& v) {
    if (v) s.overrides.emplace_back(key, std::to_string(*v));
  };
  put("l1_ways", f.l1_ways);
  put("l1_line", f.l1_line);
  put("l1_size", f.l1_size);
  put("mshr", f.mshr);
  put("spm_bytes", f.spm_size);
  for (const auto& kv : f.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    s.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

std::string out_path(const Flags& f, const std::string& fallback) {
  if (!f.out.empty()) return f.out;
  return (std::filesystem::path(default_out_dir()) / fallback).string();
}

void print_summary(const RunStats& r) {
  std::cout << r.run_id << ": cycles=" << r.total_cycles << " util=" << format_fixed(r.utilization(), 4)
            << " l1_acc=" << r.l1_accesses << " l1_miss=" << r.l1_demand_misses << " dram=" << r.dram_accesses
            << " image=" << std::hex << r.image_digest << std::dec << "\n";
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Cycle-level CGRA memory-system simulator"};
  app.require_subcommand(1);
  Flags run_f, sweep_f, cmp_f;

  auto* run = app.add_subcommand("run", "simulate one kernel under one variant");
  add_common(run, run_f, true);

  auto* sw = app.add_subcommand("sweep", "vary one hardware parameter");
  add_common(sw, sweep_f, true);
  std::string param;
  std::vector<std::uint32_t> values;
  sw->add_option("--param", param, "assoc|line|size|mshr|spm")->required();
  sw->add_option("--values", values, "comma separated values")->required()->delimiter(',');

  auto* cmp = app.add_subcommand("compare", "run a kernel set under every variant");
  add_common(cmp, cmp_f, false);
  std::vector<std::string> kernels;
  cmp->add_option("kernels", kernels, "kernel files, builtin names or pattern:<kind>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      finalize(run_f);
      std::cout << repro_line(run_f.spec) << "\n";
      RunStats r = execute(run_f.spec);
      const std::string path = out_path(run_f, "runs.csv");
      append_csv({r}, path);
      print_summary(r);
      std::cout << "csv: " << path << "\n";
    } else if (*sw) {
      finalize(sweep_f);
      std::cout << repro_line(sweep_f.spec) << "\nsweep: " << param << "\n";
      auto rows = sweep(sweep_f.spec, param, values);
      const std::string path = out_path(sweep_f, "sweep-" + param + ".csv");
      emit_csv(rows, path);
      for (const auto& r : rows) print_summary(r);
      std::cout << "csv: " << path << "\n";
    } else if (*cmp) {
      finalize(cmp_f);
      std::cout << repro_line(cmp_f.spec) << "\n";
      auto rows = compare(cmp_f.spec, kernels);
      const std::string path = out_path(cmp_f, "compare.csv");
      std::ofstream os(path, std::ios::trunc);
      if (!os) throw ConfigError("cannot write " + path);
      os << format_compare(rows);
      bool ok = true;
      for (const auto& r : rows) {
        std::cout << r.kernel << " " << r.variant << " cycles=" << r.cycles << " " << r.status << "\n";
        ok = ok && r.status == "ok";
      }
      std::cout << "csv: " << path << "\n";
      if (!ok) return 1;
    }
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace cgra
