#include "fgrowth/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "fgrowth/errors.hpp"
#include "fgrowth/exact_models.hpp"
#include "fgrowth/staircase.hpp"

namespace fgrowth {

using nlohmann::json;

unsigned worker_count() {
  if (const char* env = std::getenv("FG_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<double> range_values(double from, double to, double step) {
  if (!(step > 0.0)) throw ModelError("range step must be > 0");
  if (to < from) throw ModelError("range end lies before its start");
  std::vector<double> out;
  const double count = std::floor((to - from) / step + 1e-9);
  for (long i = 0; i <= static_cast<long>(count); ++i) {
    out.push_back(from + step * static_cast<double>(i));
  }
  return out;
}

namespace {

DivisionKernel sweep_kernel(const DivisionKernel& base, const SweepPoint& p) {
  TimeModulation psi = base.psi();
  if (p.epsilon > 0.0) {
    const auto tau = psi.tau();
    if (!tau) throw ModelError("epsilon sweeps need a square-wave modulation");
    psi = TimeModulation::shifted_square_wave(*tau, psi.period(), p.epsilon);
  }
  return DivisionKernel(p.kappa, psi, base.B(), p.a);
}

}  // namespace

std::vector<SweepRow> floquet_sweep(const DivisionKernel& base, long steps_per_period,
                                    const std::vector<SweepPoint>& points,
                                    const FloquetOptions& opts, unsigned workers,
                                    std::optional<double> x_extent) {
  std::vector<SweepRow> rows(points.size());
  FloquetOptions local = opts;
  local.keep_profile = false;
  parallel_for(points.size(), workers, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.point = points[i];
    try {
      const DivisionKernel k = sweep_kernel(base, points[i]);
      const double extent = x_extent.value_or(3.0 * k.period());
      const Grid grid = Grid::for_kernel(k, steps_per_period, k.a() + extent);
      const GridAlignment aligned = align_to_grid(k, grid);
      row.point.a = majority_age(aligned.kernel);
      const FloquetResult r = floquet_eigen(aligned.kernel, grid, local);
      row.lambda = r.lambda;
      row.residual = r.residual;
      row.iterations = r.iterations;
      row.lost_mass = r.lost_mass;
      row.status = "ok";
    } catch (const NonConverged& e) {
      row.lambda = e.last_estimate();
      row.residual = e.residual();
      row.iterations = e.iterations();
      row.status = "non_converged";
    } catch (const Degenerate&) {
      row.status = "degenerate";
    } catch (const std::exception&) {
      row.status = "error";
    }
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "a,kappa,lambda,residual,iterations,lost_mass,status\n";
  for (const auto& r : rows) {
    out << format_number(r.point.a) << ',' << format_number(r.point.kappa) << ','
        << format_number(r.lambda) << ',' << format_number(r.residual) << ',' << r.iterations
        << ',' << format_number(r.lost_mass) << ',' << r.status << '\n';
  }
  return out.str();
}

LimitsProbe noncommuting_limits_probe(double a, double tau, double T,
                                      const std::vector<double>& eps_list,
                                      const std::vector<double>& kappa_list,
                                      long steps_per_period, const FloquetOptions& opts,
                                      unsigned workers) {
  if (eps_list.empty() || kappa_list.empty()) throw ModelError("probe lists must be nonempty");
  if (!std::is_sorted(eps_list.begin(), eps_list.end()) ||
      !std::is_sorted(kappa_list.begin(), kappa_list.end())) {
    throw ModelError("probe lists must be ascending");
  }
  LimitsProbe probe;
  probe.epsilons = eps_list;
  probe.kappas = kappa_list;

  const DivisionKernel base(1.0, TimeModulation::square_wave(tau, T), AgeModulation::one(), a);
  std::vector<SweepPoint> points;
  for (double e : eps_list) {
    for (double k : kappa_list) points.push_back({a, k, e});
  }
  probe.rows = floquet_sweep(base, steps_per_period, points, opts, workers);

  const double a_used = probe.rows.front().point.a;
  probe.log2_over_a = std::numbers::ln2 / a_used;
  probe.lambda_inf = lambda_infinity<double>(a_used, tau, T);
  probe.reference_gap = probe.log2_over_a - probe.lambda_inf;
  const std::size_t nk = kappa_list.size();
  probe.kappa_first = probe.at(eps_list.size() - 1, nk - 1).lambda;
  probe.epsilon_first = probe.at(0, nk - 1).lambda;
  probe.gap = probe.kappa_first - probe.epsilon_first;

  const double slack = 2.0 * T / static_cast<double>(steps_per_period);
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    for (std::size_t j = 0; j < nk; ++j) {
      const SweepRow& here = probe.at(i, j);
      if (here.status != "ok") continue;
      if (i + 1 < eps_list.size() && probe.at(i + 1, j).status == "ok" &&
          probe.at(i + 1, j).lambda < here.lambda - slack) {
        probe.monotone = false;
      }
      if (j + 1 < nk && probe.at(i, j + 1).status == "ok" &&
          probe.at(i, j + 1).lambda < here.lambda - slack) {
        probe.monotone = false;
      }
    }
  }
  return probe;
}

json to_json(const LimitsProbe& probe) {
  json cells = json::array();
  for (std::size_t i = 0; i < probe.epsilons.size(); ++i) {
    for (std::size_t j = 0; j < probe.kappas.size(); ++j) {
      const SweepRow& r = probe.at(i, j);
      cells.push_back({{"epsilon", probe.epsilons[i]},
                       {"kappa", probe.kappas[j]},
                       {"lambda", r.lambda},
                       {"residual", r.residual},
                       {"iterations", r.iterations},
                       {"status", r.status}});
    }
  }
  return {{"a", probe.rows.front().point.a},
          {"log2_over_a", probe.log2_over_a},
          {"lambda_inf", probe.lambda_inf},
          {"kappa_first", probe.kappa_first},
          {"epsilon_first", probe.epsilon_first},
          {"gap", probe.gap},
          {"reference_gap", probe.reference_gap},
          {"monotone", probe.monotone},
          {"cells", cells}};
}

// ------------------------------------------------------------------ experiments

std::vector<std::string> template_names() {
  return {"staircase-tau05", "staircase-tau033", "staircase-tau067", "log2-over-a",
          "counterexample-surface"};
}

ExperimentSpec experiment_template(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  auto staircase_sweep = [&](double tau) {
    s.psi = "square_wave";
    s.tau = tau;
    s.period = 1.0;
    s.a_values = range_values(0.005, 1.2, 0.005);
    s.kappa_values = {10.0, 30.0, 50.0, 100.0};
    s.steps_per_period = 600;
  };
  if (name == "staircase-tau05") {
    staircase_sweep(0.5);
  } else if (name == "staircase-tau033") {
    staircase_sweep(1.0 / 3.0);
  } else if (name == "staircase-tau067") {
    staircase_sweep(2.0 / 3.0);
  } else if (name == "log2-over-a") {
    s.psi = "constant";
    s.a_values = range_values(0.25, 2.0, 0.05);
    s.kappa_values = {1.0, 5.0, 20.0, 50.0};
    s.steps_per_period = 500;
    s.x_extent = 30.0;
  } else if (name == "counterexample-surface") {
    s.kind = "counterexample_surface";
  } else {
    throw ModelError("unknown experiment template '" + name + "'");
  }
  return s;
}

namespace {

std::vector<double> parse_values(const json& j, const std::string& key) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ModelError("'" + key + "' entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (j.is_object()) {
    for (const auto& item : j.items()) {
      if (item.key() != "from" && item.key() != "to" && item.key() != "step") {
        throw ModelError("unknown field '" + item.key() + "' in range '" + key + "'");
      }
    }
    if (!j.contains("from") || !j.contains("to") || !j.contains("step")) {
      throw ModelError("range '" + key + "' needs from, to and step");
    }
    return range_values(j.at("from").get<double>(), j.at("to").get<double>(),
                        j.at("step").get<double>());
  }
  throw ModelError("'" + key + "' must be an array or a range object");
}

std::pair<double, double> parse_pair(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ModelError("'" + key + "' must be a [low, high] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void write_file(const std::filesystem::path& path, const std::string& content,
                RunReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write '" + path.string() + "'");
  out << content;
  report.files.push_back(path.string());
}

std::string sweep_plot(const ExperimentSpec& s, const std::string& data,
                       const std::string& reference) {
  std::ostringstream gp;
  gp << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 'a'\nset ylabel 'lambda'\n"
     << "set title '" << s.name << "'\n"
     << "plot '" << reference << "' using 1:2 with lines lw 2 title 'reference'";
  for (double k : s.kappa_values) {
    gp << ", \\\n     '" << data << "' using 1:($2==" << format_number(k)
       << " ? $3 : 1/0) with points title 'kappa=" << format_number(k) << "'";
  }
  gp << "\n";
  return gp.str();
}

}  // namespace

ExperimentSpec parse_experiment(const json& j) {
  if (!j.is_object()) throw ModelError("experiment spec must be a JSON object");
  static const std::vector<std::string> known = {
      "template", "name",     "kind",         "psi",        "tau",       "period",
      "a",        "kappa",    "epsilon",      "steps_per_period", "x_extent", "exact_edges",
      "tol",      "max_iter", "a1",           "a2",         "alpha",     "b1_range",
      "b2_range", "resolution", "output_dir"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ModelError("unknown field '" + item.key() + "' in experiment spec");
    }
  }
  ExperimentSpec s;
  if (j.contains("template")) s = experiment_template(j.at("template").get<std::string>());
  try {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
    if (j.contains("psi")) s.psi = j.at("psi").get<std::string>();
    if (j.contains("tau")) s.tau = j.at("tau").get<double>();
    if (j.contains("period")) s.period = j.at("period").get<double>();
    if (j.contains("a")) s.a_values = parse_values(j.at("a"), "a");
    if (j.contains("kappa")) s.kappa_values = parse_values(j.at("kappa"), "kappa");
    if (j.contains("epsilon")) s.epsilon_values = parse_values(j.at("epsilon"), "epsilon");
    if (j.contains("steps_per_period")) s.steps_per_period = j.at("steps_per_period").get<long>();
    if (j.contains("x_extent")) s.x_extent = j.at("x_extent").get<double>();
    if (j.contains("exact_edges")) s.exact_edges = j.at("exact_edges").get<bool>();
    if (j.contains("tol")) s.tol = j.at("tol").get<double>();
    if (j.contains("max_iter")) s.max_iter = j.at("max_iter").get<long>();
    if (j.contains("a1")) s.a1 = j.at("a1").get<double>();
    if (j.contains("a2")) s.a2 = j.at("a2").get<double>();
    if (j.contains("alpha")) s.alpha = j.at("alpha").get<double>();
    if (j.contains("b1_range")) s.b1_range = parse_pair(j.at("b1_range"), "b1_range");
    if (j.contains("b2_range")) s.b2_range = parse_pair(j.at("b2_range"), "b2_range");
    if (j.contains("resolution")) s.resolution = j.at("resolution").get<long>();
    if (j.contains("output_dir")) s.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed experiment spec: ") + e.what());
  }
  if (s.name.empty()) throw ModelError("experiment spec needs a name or a template");
  if (s.kind != "floquet_sweep" && s.kind != "counterexample_surface") {
    throw ModelError("unknown experiment kind '" + s.kind + "'");
  }
  if (s.kind == "floquet_sweep") {
    if (s.psi != "square_wave" && s.psi != "constant") {
      throw ModelError("experiment psi must be square_wave or constant");
    }
    if (s.a_values.empty() || s.kappa_values.empty()) {
      throw ModelError("floquet sweeps need a and kappa values");
    }
  }
  return s;
}

RunReport run_experiment(const ExperimentSpec& spec, unsigned workers) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.output_dir);
  fs::create_directories(dir);
  RunReport report;

  if (spec.kind == "counterexample_surface") {
    const RateSurface surf = counterexample_surface(spec.a1, spec.a2, spec.b1_range,
                                                    spec.b2_range, spec.resolution, spec.alpha);
    std::ostringstream csv;
    csv << "b1,b2,lambda\n";
    for (std::size_t i = 0; i < surf.b1.size(); ++i) {
      for (std::size_t jj = 0; jj < surf.b2.size(); ++jj) {
        csv << format_number(surf.b1[i]) << ',' << format_number(surf.b2[jj]) << ','
            << format_number(surf.lambda[i][jj]) << '\n';
      }
      csv << '\n';  // blank line between scan lines for splot
    }
    const std::string data = spec.name + "_surface.csv";
    write_file(dir / data, csv.str(), report);
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set xlabel 'b1'\nset ylabel 'b2'\nset zlabel 'lambda'\n"
       << "set title '" << spec.name << " (a1=" << format_number(spec.a1)
       << ", a2=" << format_number(spec.a2) << ")'\n"
       << "set pm3d\nsplot '" << data << "' every ::1 using 1:2:3 with pm3d notitle\n";
    write_file(dir / (spec.name + ".gp"), gp.str(), report);
    report.points = static_cast<long>(surf.b1.size() * surf.b2.size());
    return report;
  }

  const TimeModulation psi = spec.psi == "constant"
                                 ? TimeModulation::constant(1.0, spec.period)
                                 : TimeModulation::square_wave(spec.tau, spec.period);
  const DivisionKernel base(1.0, psi, AgeModulation::one(), spec.a_values.front());
  const std::vector<double> eps =
      spec.epsilon_values.empty() ? std::vector<double>{0.0} : spec.epsilon_values;
  std::vector<SweepPoint> points;
  for (double a : spec.a_values) {
    const double a_used = spec.exact_edges ? a : a + 1e-6;
    for (double k : spec.kappa_values) {
      for (double e : eps) points.push_back({a_used, k, e});
    }
  }
  FloquetOptions opts;
  opts.tol = spec.tol;
  opts.max_iter = spec.max_iter;
  const auto rows =
      floquet_sweep(base, spec.steps_per_period, points, opts, workers, spec.x_extent);
  report.points = static_cast<long>(rows.size());
  for (const auto& r : rows) report.failures += r.status == "ok" ? 0 : 1;

  const std::string data = spec.name + "_sweep.csv";
  write_file(dir / data, sweep_csv(rows), report);

  std::ostringstream ref;
  ref << "a,lambda_ref\n";
  const double lo = spec.a_values.front();
  const double hi = spec.a_values.back();
  const double h = (hi - lo) / 2000.0;
  for (int i = 0; i <= 2000; ++i) {
    const double a = lo + h * i;
    const double value = spec.psi == "constant"
                             ? std::numbers::ln2 / a
                             : lambda_infinity<double>(a, spec.tau, spec.period);
    ref << format_number(a) << ',' << format_number(value) << '\n';
  }
  const std::string reference = spec.name + "_reference.csv";
  write_file(dir / reference, ref.str(), report);
  write_file(dir / (spec.name + ".gp"), sweep_plot(spec, data, reference), report);
  return report;
}

}  // namespace fgrowth
