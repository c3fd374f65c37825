#include "sktmorse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sktmorse/errors.hpp"
#include "sktmorse/limiting.hpp"

namespace skt {

using json = nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double_exact(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw parse_error("invalid number '" + s + "'", line);
  return v;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

void apply_config_override(RunConfig& c, const std::string& key,
                           const std::string& value) {
  auto num = [&](const std::string& v) { return parse_double_exact(v, 0); };
  if (key == "lambda") c.model.lambda = num(value);
  else if (key == "alpha") c.model.alpha = num(value);
  else if (key == "b1") c.model.b1 = num(value);
  else if (key == "b2") c.model.b2 = num(value);
  else if (key == "c1") c.model.c1 = num(value);
  else if (key == "c2") c.model.c2 = num(value);
  else if (key == "ell") c.model.ell = num(value);
  else if (key == "n") c.n = static_cast<int>(num(value));
  else if (key == "lambda_min") c.lambda_min = num(value);
  else if (key == "lambda_max") c.lambda_max = num(value);
  else if (key == "ds_init") c.controls.ds_init = num(value);
  else if (key == "ds_max") c.controls.ds_max = num(value);
  else if (key == "m") c.controls.num_eigenvalues = static_cast<int>(num(value));
  else if (key == "newton_tol") c.controls.newton.tol_residual = num(value);
  else if (key == "switch_delta") c.controls.switch_delta_rel = num(value);
  else if (key == "switch_offset") c.controls.switch_offset = num(value);
  else if (key == "branches") c.branches = split(value, ',');
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "seed") c.seed = static_cast<unsigned long long>(num(value));
  else throw parse_error("unknown config key '" + key + "'", 0);
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw;
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw parse_error("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    try {
      apply_config_override(c, key, value);
    } catch (const parse_error& e) {
      throw parse_error(e.what(), line);
    }
  }
  if (c.n < 3) throw parse_error("n must be >= 3", 0);
  c.model.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_string(const RunConfig& c) {
  std::ostringstream os;
  os << "alpha = " << format_double(c.model.alpha) << "\n"
     << "b1 = " << format_double(c.model.b1) << "\n"
     << "b2 = " << format_double(c.model.b2) << "\n"
     << "c1 = " << format_double(c.model.c1) << "\n"
     << "c2 = " << format_double(c.model.c2) << "\n"
     << "ell = " << format_double(c.model.ell) << "\n"
     << "n = " << c.n << "\n"
     << "lambda_min = " << format_double(c.lambda_min) << "\n"
     << "lambda_max = " << format_double(c.lambda_max) << "\n"
     << "ds_init = " << format_double(c.controls.ds_init) << "\n"
     << "ds_max = " << format_double(c.controls.ds_max) << "\n"
     << "m = " << c.controls.num_eigenvalues << "\n"
     << "seed = " << c.seed << "\n";
  os << "branches = ";
  for (size_t i = 0; i < c.branches.size(); ++i)
    os << (i ? "," : "") << c.branches[i];
  os << "\noutput_dir = " << c.output_dir.string() << "\n";
  return os.str();
}

void save_snapshot(const SnapshotData& snap, const Grid& grid,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write snapshot " + path.string());
  out << "x,u,v\n";
  for (int i = 0; i < grid.n; ++i) {
    out << format_double(grid.node(i)) << ',' << format_double(snap.state.u[i])
        << ',' << format_double(snap.state.v[i]) << '\n';
  }
  out.close();

  json meta;
  meta["lambda"] = snap.params.lambda;
  meta["alpha"] = snap.params.alpha;
  meta["b1"] = snap.params.b1;
  meta["b2"] = snap.params.b2;
  meta["c1"] = snap.params.c1;
  meta["c2"] = snap.params.c2;
  meta["ell"] = snap.params.ell;
  meta["n"] = grid.n;
  meta["branch_tag"] = to_string(snap.state.tag);
  meta["morse_index"] = snap.morse_index;
  std::ofstream mout(path.string() + ".meta.json");
  mout << meta.dump(2) << "\n";
}

SnapshotData load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open snapshot " + path.string());
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || trim(line) != "x,u,v")
    throw parse_error("snapshot header must be 'x,u,v'", 1);

  SnapshotData snap;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 3)
      throw parse_error("expected 3 comma-separated values", lineno);
    parse_double_exact(parts[0], lineno);  // x column is informational
    snap.state.u.push_back(parse_double_exact(parts[1], lineno));
    snap.state.v.push_back(parse_double_exact(parts[2], lineno));
  }

  std::ifstream min(path.string() + ".meta.json");
  if (!min)
    throw input_error("missing snapshot sidecar " + path.string() +
                      ".meta.json");
  json meta;
  try {
    min >> meta;
  } catch (const json::exception& e) {
    throw parse_error(std::string("sidecar JSON: ") + e.what(), 0);
  }
  snap.params.lambda = meta.at("lambda").get<double>();
  snap.params.alpha = meta.at("alpha").get<double>();
  snap.params.b1 = meta.at("b1").get<double>();
  snap.params.b2 = meta.at("b2").get<double>();
  snap.params.c1 = meta.at("c1").get<double>();
  snap.params.c2 = meta.at("c2").get<double>();
  snap.params.ell = meta.at("ell").get<double>();
  snap.n = meta.at("n").get<int>();
  snap.state.tag = branch_tag_from_string(meta.at("branch_tag").get<std::string>());
  snap.morse_index = meta.at("morse_index").get<int>();
  if (snap.n != static_cast<int>(snap.state.u.size()))
    throw parse_error("row count does not match sidecar n", lineno);
  return snap;
}

namespace {

double l2_norm_weighted(const std::vector<double>& x, double h) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return std::sqrt(h * s);
}

}  // namespace

void write_branch_csv(const Branch& branch, const Grid& grid,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write branch table " + path.string());
  out << "arclength,lambda,l2_norm_u,l2_norm_v,sup_u,sup_v,morse_index,"
         "critical_flag,overlap_ratio\n";
  for (const BranchPoint& p : branch.points) {
    double overlap = std::nan("");
    try {
      overlap = segregation_measure(p.state, grid);
    } catch (const undefined_measure_error&) {
      // zero state: ratio undefined, recorded as nan
    }
    out << format_double(p.arclength) << ',' << format_double(p.lambda) << ','
        << format_double(l2_norm_weighted(p.state.u, grid.h)) << ','
        << format_double(l2_norm_weighted(p.state.v, grid.h)) << ','
        << format_double(max_norm(p.state.u)) << ','
        << format_double(max_norm(p.state.v)) << ',' << p.morse_index << ','
        << (p.critical_flag ? 1 : 0) << ',' << format_double(overlap) << '\n';
  }
}

std::vector<std::vector<double>> read_branch_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open branch table " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw parse_error("empty branch table", 1);
  if (trim(line) !=
      "arclength,lambda,l2_norm_u,l2_norm_v,sup_u,sup_v,morse_index,"
      "critical_flag,overlap_ratio")
    throw parse_error("unexpected branch table header", 1);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 9)
      throw parse_error("expected 9 columns", lineno);
    std::vector<double> row;
    for (const auto& p : parts) {
      if (p == "nan" || p == "-nan" || p == "nan(ind)")
        row.push_back(std::nan(""));
      else
        row.push_back(parse_double_exact(p, lineno));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_events_json(const std::vector<NamedEvent>& events,
                       const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& e : events) {
    arr.push_back({{"branch", e.branch},
                   {"lambda_star", e.lambda_star},
                   {"crossing_direction", e.crossing_direction}});
  }
  std::ofstream out(path);
  if (!out) throw input_error("cannot write events " + path.string());
  out << arr.dump(2) << "\n";
}

std::vector<NamedEvent> read_events_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open events " + path.string());
  json arr;
  try {
    in >> arr;
  } catch (const json::exception& e) {
    throw parse_error(std::string("events JSON: ") + e.what(), 0);
  }
  std::vector<NamedEvent> out;
  for (const auto& e : arr) {
    NamedEvent ne;
    ne.branch = e.at("branch").get<std::string>();
    ne.lambda_star = e.at("lambda_star").get<double>();
    ne.crossing_direction = e.at("crossing_direction").get<int>();
    out.push_back(std::move(ne));
  }
  return out;
}

SteadyState named_state(const ModelParams& params, const Grid& grid,
                        const std::string& name, double lambda,
                        const NewtonSettings& settings) {
  ModelParams p = params.with_lambda(lambda);
  if (name == "trivial") return seed_trivial(grid);
  if (name == "semitrivial_u" || name == "semitrivial_v") {
    auto s = seed_semitrivial(p, grid, name == "semitrivial_u");
    if (!s)
      throw input_error("semi-trivial state requires lambda > lambda_1");
    return *s;
  }
  if (name == "coexistence") {
    auto profile = solve_ls1(lambda, grid);
    if (!profile)
      throw input_error("coexistence state requires lambda > lambda_1");
    SteadyState guess = SteadyState::zero(grid, BranchTag::coexistence);
    for (int i = 0; i < grid.n; ++i) {
      guess.u[i] = profile->U[i] / params.alpha;
      guess.v[i] = profile->U[i] / params.alpha;
    }
    SteadyState s = newton_solve(p, grid, guess, settings);
    s.tag = BranchTag::coexistence;
    return s;
  }
  // Segregation states s{j}_plus / s{j}_minus via the limiting profile.
  if (name.size() >= 2 && name[0] == 's') {
    const size_t us = name.find('_');
    if (us != std::string::npos) {
      const int j = std::atoi(name.substr(1, us - 1).c_str());
      const std::string side = name.substr(us + 1);
      if (j >= 2 && (side == "plus" || side == "minus")) {
        const int orientation = side == "plus" ? 1 : -1;
        auto w = solve_ls2(lambda, j, orientation, params.b1, params.c2, grid);
        if (!w)
          throw input_error("segregation state requires lambda > lambda_j");
        SteadyState guess = SteadyState::zero(grid, orientation > 0
                                                        ? BranchTag::segregation_plus
                                                        : BranchTag::segregation_minus);
        for (int i = 0; i < grid.n; ++i) {
          guess.u[i] = std::max(w->w[i], 0.0) + 1e-3;
          guess.v[i] = std::max(-w->w[i], 0.0) + 1e-3;
        }
        SteadyState s = newton_solve(p, grid, guess, settings);
        s.tag = guess.tag;
        return s;
      }
    }
  }
  throw input_error("unknown state name '" + name + "'");
}

namespace {

int thread_cap() {
  if (const char* env = std::getenv("SKT_MORSE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

struct TracedBranch {
  std::string name;
  Branch branch;
  bool stalled = false;
  std::string note;
};

}  // namespace

DiagramResult run_diagram(const RunConfig& config) {
  config.model.validate();
  const Grid grid = Grid::uniform(config.n, config.model.ell);
  const double lam1 = discrete_laplacian_eigenvalues(grid)[0];
  std::filesystem::create_directories(config.output_dir);

  DiagramResult result;
  auto requested = [&](const std::string& b) {
    return std::find(config.branches.begin(), config.branches.end(), b) !=
           config.branches.end();
  };

  StopRule stop;
  stop.lambda_max = config.lambda_max;

  auto trace = [&](const std::string& name,
                   std::optional<SteadyState> seed_state,
                   double lambda0) -> TracedBranch {
    TracedBranch tb;
    tb.name = name;
    if (!seed_state) {
      tb.note = "no seed in range";
      return tb;
    }
    ModelParams p0 = config.model.with_lambda(lambda0);
    BranchPoint start = make_branch_point(p0, grid, *seed_state, 0.0,
                                          config.controls.num_eigenvalues);
    try {
      tb.branch = continue_branch(config.model, grid, start, +1,
                                  config.controls, stop);
    } catch (const stall_error& e) {
      tb.branch = e.partial;
      tb.stalled = true;
    }
    return tb;
  };

  // Phase A: the primary branches, independent of each other.
  std::vector<std::pair<std::string, std::function<TracedBranch()>>> jobs;
  if (requested("trivial")) {
    jobs.emplace_back("trivial", [&] {
      return trace("trivial", seed_trivial(grid), config.lambda_min);
    });
  }
  const double lambda_seed = lam1 + 0.3;
  const bool seeds_in_range = lambda_seed < config.lambda_max;
  if (requested("semitrivial_u")) {
    jobs.emplace_back("semitrivial_u", [&] {
      auto s = seeds_in_range
                   ? seed_semitrivial(config.model.with_lambda(lambda_seed),
                                      grid, true)
                   : std::nullopt;
      return trace("semitrivial_u", s, lambda_seed);
    });
  }
  if (requested("semitrivial_v")) {
    jobs.emplace_back("semitrivial_v", [&] {
      auto s = seeds_in_range
                   ? seed_semitrivial(config.model.with_lambda(lambda_seed),
                                      grid, false)
                   : std::nullopt;
      return trace("semitrivial_v", s, lambda_seed);
    });
  }
  const bool need_coexistence =
      requested("coexistence") || requested("s2") || requested("s3");
  if (need_coexistence) {
    jobs.emplace_back("coexistence", [&] {
      auto s = seeds_in_range
                   ? seed_coexistence(config.model, grid, lambda_seed,
                                      config.controls.newton)
                   : std::nullopt;
      return trace("coexistence", s, lambda_seed);
    });
  }

  std::vector<TracedBranch> traced(jobs.size());
  const int cap = thread_cap();
  for (size_t base = 0; base < jobs.size(); base += cap) {
    std::vector<std::future<TracedBranch>> wave;
    const size_t end = std::min(jobs.size(), base + cap);
    for (size_t i = base + 1; i < end; ++i)
      wave.push_back(std::async(std::launch::async, jobs[i].second));
    traced[base] = jobs[base].second();
    for (size_t i = base + 1; i < end; ++i)
      traced[i] = wave[i - base - 1].get();
  }

  const Branch* coexistence = nullptr;
  for (auto& tb : traced) {
    if (tb.name == "coexistence" && !tb.branch.points.empty())
      coexistence = &tb.branch;
  }

  // Phase B: bifurcation events on the coexistence branch.
  std::vector<BifurcationEvent> coex_events;
  if (coexistence && coexistence->points.size() >= 2) {
    coex_events = detect_bifurcations(config.model, grid, *coexistence,
                                      config.controls);
    for (const auto& e : coex_events)
      result.events.push_back({"coexistence", e.lambda_star,
                               e.crossing_direction});
  }
  // Trivial-branch events (the primary bifurcation at lambda_1).
  for (auto& tb : traced) {
    if (tb.name != "trivial" || tb.branch.points.size() < 2) continue;
    auto evs = detect_bifurcations(config.model, grid, tb.branch,
                                   config.controls);
    tb.branch.events = evs;
    for (const auto& e : evs)
      result.events.push_back({"trivial", e.lambda_star, e.crossing_direction});
  }

  // Phase C: pitchfork children off the coexistence branch.
  std::vector<TracedBranch> children;
  auto spawn_children = [&](int which, const std::string& stem) {
    if (static_cast<int>(coex_events.size()) <= which) {
      result.skipped.push_back(stem + " (no bifurcation event in range)");
      return;
    }
    const BifurcationEvent& ev = coex_events[which];
    const BranchPoint* parent = nullptr;
    for (const auto& p : coexistence->points) {
      if (p.lambda <= ev.lambda_star + config.controls.switch_offset)
        parent = &p;
    }
    if (!parent) parent = &coexistence->points.front();
    for (int sign : {+1, -1}) {
      const std::string name = stem + (sign > 0 ? "_plus" : "_minus");
      TracedBranch tb;
      tb.name = name;
      try {
        BranchPoint child = switch_branch_auto(config.model, grid, ev, *parent,
                                               sign, config.controls);
        StepControls child_controls = config.controls;
        child_controls.ds_init = std::min(0.25, config.controls.ds_init);
        tb.branch = continue_branch(config.model, grid, child, +1,
                                    child_controls, stop);
      } catch (const stall_error& e) {
        tb.branch = e.partial;
        tb.stalled = true;
      } catch (const error& e) {
        tb.note = e.what();
      }
      children.push_back(std::move(tb));
    }
  };
  if (requested("s2") && coexistence) spawn_children(0, "s2");
  if (requested("s3") && coexistence) spawn_children(1, "s3");

  for (auto& tb : children) traced.push_back(std::move(tb));

  // Outputs.
  std::ofstream diagram(config.output_dir / "diagram.csv");
  diagram << "branch,lambda,l2_norm_u,morse_index,color_class\n";
  for (const auto& tb : traced) {
    if (tb.branch.points.empty()) {
      if (!tb.note.empty())
        result.skipped.push_back(tb.name + " (" + tb.note + ")");
      else
        result.skipped.push_back(tb.name);
      continue;
    }
    const auto path = config.output_dir / ("branch_" + tb.name + ".csv");
    write_branch_csv(tb.branch, grid, path);
    result.files.push_back(path);
    if (tb.stalled) {
      result.stalled.push_back(tb.name);
      result.partial = true;
    }
    for (const BranchPoint& p : tb.branch.points) {
      diagram << tb.name << ',' << format_double(p.lambda) << ','
              << format_double(l2_norm_weighted(p.state.u, grid.h)) << ','
              << p.morse_index << ',' << std::min(p.morse_index, 3) << '\n';
    }
  }
  diagram.close();
  result.files.push_back(config.output_dir / "diagram.csv");

  write_events_json(result.events, config.output_dir / "events.json");
  result.files.push_back(config.output_dir / "events.json");

  // Machine-readable run record (config echo + seed, for reproducibility).
  {
    std::ofstream rec(config.output_dir / "run.json");
    json j;
    j["config"] = config_to_string(config);
    j["seed"] = config.seed;
    j["stalled"] = result.stalled;
    j["skipped"] = result.skipped;
    rec << j.dump(2) << "\n";
    result.files.push_back(config.output_dir / "run.json");
  }
  return result;
}

}  // namespace skt
