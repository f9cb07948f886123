#pragma once

// Command-line front end. `run` is the whole program minus main(), so tests can
// drive it in-process with captured streams.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "discordnet/emit.hpp"
#include "discordnet/experiments.hpp"

namespace discordnet::cli {

inline constexpr const char* version = "0.3.0";

enum ExitCode : int { ok = 0, config_error = 1, numerical_error = 2 };

/// Flat key=value lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace detail {

inline std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw ConfigError("'" + cell + "' is not a number");
    }
    if (used != cell.size()) throw ConfigError("'" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

inline states::Params parse_params(const std::vector<std::string>& items) {
  states::Params p;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + it + "'");
    const auto v = split_doubles(it.substr(eq + 1));
    if (v.size() != 1) throw ConfigError("--param '" + it + "' needs one number");
    p[it.substr(0, eq)] = v[0];
  }
  return p;
}

inline void print_records(std::ostream& out, const std::vector<SweepRecord>& records) {
  for (const auto& r : records) {
    out << r.experiment;
    for (const auto& [k, v] : r.tags) out << ' ' << k << '=' << v;
    for (const auto& [k, v] : r.params) out << ' ' << k << '=' << emit::format_number(v);
    for (const auto& [k, v] : r.values) out << ' ' << k << '=' << emit::format_number(v);
    out << '\n';
  }
}

// Applies config-file entries to options of `chain` that the command line left unset.
inline void apply_config(const std::map<std::string, std::string>& kv, const std::vector<CLI::App*>& chain) {
  for (const auto& [key, value] : kv) {
    CLI::Option* opt = nullptr;
    for (auto it = chain.rbegin(); it != chain.rend() && !opt; ++it) opt = (*it)->get_option_no_throw("--" + key);
    if (!opt) throw ConfigError("config key '" + key + "' matches no option of this command");
    if (opt->count() > 0) continue;  // the command line wins
    if (opt->get_expected_max() == 0) {  // flag
      if (value == "true" || value == "1") opt->add_result("true");
      else if (value != "false" && value != "0") throw ConfigError("config key '" + key + "' expects true/false");
      else continue;
    } else {
      std::stringstream ss(value);
      std::string cell;
      if (opt->get_expected_max() > 1)
        while (std::getline(ss, cell, ',')) opt->add_result(cell);
      else
        opt->add_result(value);
    }
    opt->run_callback();
  }
}

}  // namespace detail

/// Global settings shared by every subcommand.
struct Globals {
  std::uint64_t seed = 20240601;
  std::string out_dir;  // empty: print only
  std::string format = "csv";
  unsigned threads = 1;
  std::string inner_budget = "fast";
  std::string config_file;

  experiments::Options options() const {
    experiments::Options o;
    if (inner_budget == "full") o.inner = InnerBudget::full();
    else if (inner_budget == "fast") o.inner = InnerBudget::fast();
    else throw ConfigError("--inner-budget must be fast or full");
    o.final = InnerBudget::full();
    o.inner.seed = o.final.seed = seed;
    o.threads = std::max(1u, threads);
    return o;
  }
};

/// Collects named record tables for printing and optional emission.
class Session {
 public:
  Session(const Globals& g, std::string command, std::ostream& out) : g_(g), out_(out) {
    manifest_.command = std::move(command);
    manifest_.seed = g.seed;
    manifest_.version = version;
    manifest_.started = std::chrono::system_clock::now();
  }
  void note(const std::string& key, const std::string& value) { manifest_.config[key] = value; }

  void table(const std::string& stem, const std::vector<SweepRecord>& records) {
    detail::print_records(out_, records);
    if (!g_.out_dir.empty()) emit::write_records(g_.out_dir, stem, records, emit::parse_format(g_.format), manifest_);
  }

  void finish() {
    manifest_.finished = std::chrono::system_clock::now();
    if (!g_.out_dir.empty()) emit::write_manifest(g_.out_dir, manifest_);
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  emit::RunManifest manifest_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  namespace ex = experiments;
  CLI::App app{"Discord distribution through classically correlated carriers. Angles are in radians."};
  app.name("discordnet");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "seed for randomized optimizer stages")->capture_default_str();
  app.add_option("--out", g.out_dir, "directory for data files and manifest (omit to print only)");
  app.add_option("--format", g.format, "data file format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (DISCORDNET_THREADS overrides)")->capture_default_str();
  app.add_option("--inner-budget", g.inner_budget, "inner optimizer budget inside outer searches")
      ->check(CLI::IsMember({"fast", "full"}))
      ->capture_default_str();
  app.add_option("--config", g.config_file, "key=value file; command-line flags take precedence");
  app.set_version_flag("--version", std::string("discordnet ") + version);

  // protocol run / optimize / ghz
  auto* protocol = app.add_subcommand("protocol", "run the carrier/memory circuit");
  protocol->require_subcommand(1);
  auto* prun = protocol->add_subcommand("run", "one circuit run; reports discord and GQD of the retained state");
  std::size_t n = 2;
  std::vector<double> thetas, phis, outcome_bits;
  std::vector<std::size_t> interactions;
  std::string carriers = "classical", memories = "plus", report = "all";
  std::vector<std::string> carrier_params, memory_params;
  double noise_p = 0, noise_mu = 1;
  prun->add_option("--n", n, "number of memories")->capture_default_str();
  prun->add_option("--theta", thetas, "carrier polar angles, comma separated (one value = all carriers)")
      ->delimiter(',')
      ->required();
  prun->add_option("--phi", phis, "carrier azimuthal angles (default 0)")->delimiter(',');
  prun->add_option("--interactions", interactions, "1-based interacting pairs (default all)")->delimiter(',');
  prun->add_option("--outcome", outcome_bits, "carrier outcome bits (default all 0)")->delimiter(',');
  prun->add_option("--carriers", carriers, "carrier state family")->capture_default_str();
  prun->add_option("--carrier-param", carrier_params, "carrier family parameter key=value");
  prun->add_option("--memories", memories, "memory state family")->capture_default_str();
  prun->add_option("--memory-param", memory_params, "memory family parameter key=value");
  prun->add_option("--noise", noise_p, "correlated dephasing strength p on the memories")->capture_default_str();
  prun->add_option("--mu", noise_mu, "dephasing correlation strength")->capture_default_str();
  prun->add_option("--report", report, "quantities to report")
      ->check(CLI::IsMember({"all", "discord", "gqd"}))
      ->capture_default_str();
  auto* popt = protocol->add_subcommand("optimize", "bipartite optima of D_{M1|M2} and the GQD");
  auto* pghz = protocol->add_subcommand("ghz", "carriers in a three-qubit GHZ state of |+>,|->");

  // discord / gqd of named states
  std::string state = "bell";
  std::size_t state_n = 2, measured = 2;
  std::vector<std::string> state_params;
  auto* discord = app.add_subcommand("discord", "one-way discord of a named two-or-more-qubit state");
  discord->add_option("--state", state, "state family")->capture_default_str();
  discord->add_option("--n", state_n, "qubit count for families that take one")->capture_default_str();
  discord->add_option("--param", state_params, "family parameter key=value");
  discord->add_option("--measured", measured, "1-based qubit that is measured")->capture_default_str();
  auto* gqd = app.add_subcommand("gqd", "global quantum discord of a named state");
  gqd->add_option("--state", state, "state family")->capture_default_str();
  gqd->add_option("--n", state_n, "qubit count for families that take one")->capture_default_str();
  gqd->add_option("--param", state_params, "family parameter key=value");

  // studies
  std::size_t n_min = 2, n_max = 5, census_n = 3, resolution = 61;
  auto* table1 = app.add_subcommand("table1", "N-party scaling table");
  table1->add_option("--n-min", n_min)->capture_default_str();
  table1->add_option("--n-max", n_max)->capture_default_str();
  auto* table2 = app.add_subcommand("table2", "discord-structure census for partial interaction sets");
  table2->add_option("--n", census_n)->check(CLI::IsMember({3, 4}))->capture_default_str();
  auto* heatmap = app.add_subcommand("heatmap", "D_{M1|M2}, D_{M2|M1} and GQD over (theta1, theta2)");
  heatmap->add_option("--resolution", resolution)->capture_default_str();

  auto* robust = app.add_subcommand("robustness", "robustness studies");
  robust->require_subcommand(1);
  double step = 0.01, eta_step = 0.05, width = std::numbers::pi / 10;
  bool reoptimize = false;
  std::size_t samples = 21, vres = 31, opt_vartheta = 13, opt_varphi = 7;
  auto* rcarrier = robust->add_subcommand("carrier", "mixed and correlated carrier states");
  rcarrier->add_option("--step", step, "lambda step")->capture_default_str();
  rcarrier->add_option("--eta-step", eta_step, "eta step")->capture_default_str();
  rcarrier->add_flag("--reoptimize", reoptimize, "also re-optimize the carrier bases at every lambda");
  auto* rmemory = robust->add_subcommand("memory", "pure and mixed memory states");
  rmemory->add_option("--resolution", vres, "(vartheta, varphi) grid at the fixed basis")->capture_default_str();
  rmemory->add_option("--opt-vartheta", opt_vartheta, "vartheta points with re-optimized bases")->capture_default_str();
  rmemory->add_option("--opt-varphi", opt_varphi, "varphi points with re-optimized bases")->capture_default_str();
  rmemory->add_option("--step", step, "(A1, A2) grid step")->capture_default_str();
  rmemory->add_flag("--reoptimize", reoptimize, "also re-optimize the bases on the (A1, A2) grid");
  rmemory->add_option("--width", width, "vartheta window width")->capture_default_str();
  rmemory->add_option("--samples", samples, "points across the window")->capture_default_str();
  auto* rmeas = robust->add_subcommand("measurement", "imprecise carrier measurement angles");
  rmeas->add_option("--width", width, "theta window width")->capture_default_str();
  rmeas->add_option("--samples", samples, "points per angle across the window")->capture_default_str();

  auto* app1 = app.add_subcommand("appendix1", "semiclassical / unital classification of the memory channel");
  double p_step = 0.01;
  bool no_targets = false, crossover = false;
  std::size_t tau_grid = 101;
  auto* app2 = app.add_subcommand("appendix2", "correlated dephasing on the memories");
  app2->add_option("--step", p_step, "p step")->capture_default_str();
  app2->add_flag("--no-targets", no_targets, "skip the fidelity-target curves");
  app2->add_option("--tau-grid", tau_grid, "x grid for the tau(x) family")->capture_default_str();
  app2->add_flag("--crossover", crossover, "bisect for the p where the noisy maximum passes the noiseless one");

  std::string fit_input;
  auto* fits = app.add_subcommand("fits", "linear and excess-exponential fits of the scaling table");
  fits->add_option("--input", fit_input, "table1 output (csv or json); computed when omitted");
  fits->add_option("--n-max", n_max)->capture_default_str();

  try {
    app.parse(argc, argv);
    if (!g.config_file.empty()) {
      std::ifstream f(g.config_file);
      if (!f) throw ConfigError("cannot read config file '" + g.config_file + "'");
      std::ostringstream os;
      os << f.rdbuf();
      std::vector<CLI::App*> chain = {&app};
      for (CLI::App* a = &app;;) {
        auto subs = a->get_subcommands();
        if (subs.empty()) break;
        a = subs.front();
        chain.push_back(a);
      }
      detail::apply_config(parse_config_text(os.str()), chain);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help, --version
    app.exit(e, out, err);
    err << app.help();
    return config_error;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  }

  try {
    if (const char* env = std::getenv("DISCORDNET_THREADS")) {
      const auto v = detail::split_doubles(env);
      if (v.size() != 1 || v[0] < 1) throw ConfigError("DISCORDNET_THREADS must be a positive integer");
      g.threads = static_cast<unsigned>(v[0]);
    }
    const auto opt = g.options();
    std::string command;
    for (CLI::App* a = &app;;) {
      auto subs = a->get_subcommands();
      if (subs.empty()) break;
      a = subs.front();
      command += (command.empty() ? "" : " ") + a->get_name();
    }
    Session s(g, command, out);
    s.note("seed", std::to_string(g.seed));
    s.note("inner_budget", g.inner_budget);
    s.note("threads", std::to_string(opt.threads));
    s.note("format", g.format);
    auto note_all = [&](CLI::App* sub) {
      for (const CLI::Option* o : sub->get_options())
        if (!o->get_lnames().empty() && o->get_lnames().front() != "help")
          s.note(sub->get_name() + "." + o->get_lnames().front(), o->as<std::string>());
    };
    for (CLI::App* a = &app;;) {
      auto subs = a->get_subcommands();
      if (subs.empty()) break;
      a = subs.front();
      note_all(a);
    }

    if (*prun) {
      ProtocolConfig cfg;
      cfg.n = n;
      cfg.carriers = {carriers, detail::parse_params(carrier_params)};
      cfg.memories = {memories, detail::parse_params(memory_params)};
      cfg.interactions = interactions;
      const std::size_t k = interactions.empty() ? n : interactions.size();
      if (thetas.size() == 1) thetas.assign(k, thetas[0]);
      if (phis.empty()) phis.assign(k, 0.0);
      if (phis.size() == 1) phis.assign(k, phis[0]);
      if (thetas.size() != k || phis.size() != k) throw ConfigError("need one theta and phi per interacting carrier");
      for (std::size_t i = 0; i < k; ++i) cfg.carrier_basis.push_back({thetas[i], phis[i]});
      for (double b : outcome_bits) {
        if (b != 0 && b != 1) throw ConfigError("--outcome bits must be 0 or 1");
        cfg.outcome.push_back(static_cast<int>(b));
      }
      if (noise_p != 0) {
        if (n != 2) throw ConfigError("--noise needs --n 2");
        cfg.memory_noise = correlated_dephasing(noise_p, noise_mu);
      }
      const auto res = run_circuit(cfg);
      SweepRecord rec;
      rec.experiment = "protocol_run";
      std::string labels;
      for (const auto& l : res.retained_labels) labels += l;
      rec.tags = {{"retained", labels}};
      rec.params = {{"n", static_cast<double>(n)}};
      rec.values = {{"probability", res.probability}};
      if ((report == "all" || report == "discord") && res.retained_labels.size() == 2) {
        const auto& a = res.retained_labels[0];
        const auto& b = res.retained_labels[1];
        rec.values.emplace_back("D12", discord_asym(res.final_state, b, {a}, opt.final).value);
        rec.values.emplace_back("D21", discord_asym(res.final_state, a, {b}, opt.final).value);
      }
      if (report == "all" || report == "gqd") rec.values.emplace_back("gqd", gqd_min(res.final_state, opt.final).value);
      s.table("protocol_run", {rec});
    } else if (*popt) {
      auto rec = ex::bipartite_optimum(opt);
      rec.values.emplace_back("phase_spread",
                              ex::phase_spread(rec.value("GQD_theta1"), rec.value("GQD_theta2"), opt));
      s.table("bipartite_optimum", {rec});
    } else if (*pghz) {
      s.table("ghz_variant", {ex::ghz_study(opt)});
    } else if (*discord || *gqd) {
      const auto rho = states::make_named_state(state, [&] {
        auto p = detail::parse_params(state_params);
        if (!p.count("n")) p["n"] = static_cast<double>(state_n);
        return p;
      }());
      SweepRecord rec;
      rec.tags = {{"state", state}};
      rec.params = {{"n", static_cast<double>(rho.qubits())}};
      if (*gqd) {
        rec.experiment = "gqd";
        const auto r = gqd_min(rho, opt.final);
        rec.values = {{"value", r.value}};
        rec.evaluations = r.evaluations;
        rec.converged = r.converged;
      } else {
        rec.experiment = "discord";
        if (measured < 1 || measured > rho.qubits()) throw ConfigError("--measured out of range");
        Labels rest;
        for (std::size_t q = 0; q < rho.qubits(); ++q)
          if (q + 1 != measured) rest.push_back(rho.labels()[q]);
        const auto r = discord_asym(rho, rho.labels()[measured - 1], rest, opt.final);
        rec.params.emplace_back("measured", static_cast<double>(measured));
        rec.values = {{"value", r.value}};
        rec.evaluations = r.evaluations;
        rec.converged = r.converged;
      }
      s.table(rec.experiment, {rec});
    } else if (*table1) {
      s.table("table1", ex::table1(n_max, opt, n_min));
    } else if (*table2) {
      auto c = ex::table2_census(census_n, opt);
      s.table("table2_pairs", c.pairs);
      s.table("table2_gqd", c.gqd);
    } else if (*heatmap) {
      auto h = ex::heatmaps(resolution, opt);
      s.table("heatmap_d12", h.d12);
      s.table("heatmap_d21", h.d21);
      s.table("heatmap_gqd", h.gqd);
    } else if (*rcarrier) {
      s.table("lambda_sweep", ex::lambda_sweep(step_range(0.0, 1.0, step), reoptimize, opt));
      SweepRecord avg;
      avg.experiment = "lambda_average";
      avg.params = {{"lo", 0.0}, {"hi", 0.1}, {"step", 0.005}};
      avg.values = {{"average", ex::lambda_average(opt)}};
      s.table("lambda_average", {avg});
      s.table("eta_sweep", ex::eta_sweep(step_range(0.0, 1.0, eta_step), opt));
      s.table("carrier_families", ex::carrier_families(opt));
    } else if (*rmemory) {
      s.table("memory_pure_fixed", ex::memory_pure_grid(vres, vres, false, opt));
      s.table("memory_pure_optimized", ex::memory_pure_grid(opt_vartheta, opt_varphi, true, opt));
      s.table("memory_mixed", ex::memory_mixed_grid(step_range(0.0, 1.0, step), reoptimize, opt));
      s.table("memory_window", {ex::memory_window(opt, width, samples)});
    } else if (*rmeas) {
      s.table("measurement_window", {ex::measurement_window(opt, width, samples)});
    } else if (*app1) {
      s.table("appendix1", ex::appendix1(opt));
    } else if (*app2) {
      s.table("appendix2_noise", ex::noise_sweep(step_range(0.0, 1.0, p_step), opt, !no_targets, tau_grid));
      const auto top = ex::noisy_maximum(1.0, opt);
      s.table("appendix2_outcomes", ex::outcome_dependence(1.0, top.basis, opt));
      if (crossover) {
        SweepRecord rec;
        rec.experiment = "appendix2_crossover";
        const double level = ex::bipartite_optimum(opt).value("GQD_max");
        rec.values = {{"noiseless_max", level}, {"crossover_p", ex::noise_crossover(level, opt)}};
        s.table("appendix2_crossover", {rec});
      }
    } else if (*fits) {
      std::vector<SweepRecord> table;
      if (fit_input.empty()) {
        table = ex::table1(n_max, opt);
      } else {
        const auto text = emit::read_file(fit_input);
        if (fit_input.ends_with(".json")) {
          emit::Columns cols;
          cols.values = {"n", "G_M"};
          table = emit::from_json(text, cols);
        } else {
          table = emit::from_csv(text);
        }
        for (auto& r : table) r.params = {{"n", r.value("n")}};
      }
      s.table("fits", ex::fit_records(ex::scaling_fits(table)));
    }
    s.finish();
    return ok;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return numerical_error;
  }
}

}  // namespace discordnet::cli
