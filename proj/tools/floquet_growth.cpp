// floquet-growth: command line front end for the solvers and sweeps.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgrowth/descriptor.hpp"
#include "fgrowth/errors.hpp"
#include "fgrowth/exact_models.hpp"
#include "fgrowth/experiments.hpp"
#include "fgrowth/floquet.hpp"
#include "fgrowth/generations.hpp"
#include "fgrowth/staircase.hpp"

using namespace fgrowth;
using nlohmann::json;

namespace {

bool want_json(const std::string& format) {
  if (format == "json") return true;
  if (format == "csv") return false;
  throw ModelError("--format must be csv or json");
}

// Replaces the model grid by one with spacing dx (same period and x_max).
ModelDescriptor with_dx(ModelDescriptor m, double dx) {
  if (!(dx > 0.0)) throw ModelError("--dx must be > 0");
  const double T = m.grid.period();
  const long steps = std::lround(T / dx);
  if (steps < 1 || std::abs(steps * dx - T) > 1e-9 * T) {
    throw ModelError("--dx must divide the period");
  }
  const double h = T / static_cast<double>(steps);
  const double x_max = std::ceil(m.grid.x_max() / h - 1e-9) * h;
  return {m.kernel, Grid(h, x_max, steps)};
}

int cmd_run(const std::string& path, const std::string& tmpl, const std::string& out_dir) {
  ExperimentSpec spec;
  if (!tmpl.empty()) {
    spec = experiment_template(tmpl);
  } else {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open experiment spec '" + path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ModelError(std::string("invalid JSON: ") + e.what());
    }
    spec = parse_experiment(j);
  }
  if (!out_dir.empty()) spec.output_dir = out_dir;
  const RunReport report = run_experiment(spec, worker_count());
  for (const auto& f : report.files) std::cout << f << '\n';
  std::cerr << report.points << " points, " << report.failures << " not converged\n";
  return 0;
}

int cmd_staircase(const std::string& tau_s, const std::string& T_s, const std::string& lo_s,
                  const std::string& hi_s, const std::string& step_s, bool as_json) {
  const Rational tau = parse_rational(tau_s);
  const Rational T = parse_rational(T_s);
  const Rational lo = parse_rational(lo_s);
  const Rational hi = parse_rational(hi_s);
  const Rational step = parse_rational(step_s);
  if (lo.numerator() <= 0 || step.numerator() <= 0 || hi < lo) {
    throw ModelError("need 0 < a-min <= a-max and step > 0");
  }
  json rows = json::array();
  std::ostringstream csv;
  csv << "a,N_a,p_a,lambda_inf,a_l,a_r,rate_bound\n";
  for (Rational a = lo; a <= hi; a += step) {
    const auto r = staircase<Rational>(a, tau, T);
    if (as_json) {
      rows.push_back({{"a", to_string(a)},
                      {"N_a", r.N_a},
                      {"p_a", r.p_a},
                      {"lambda_inf", r.lambda_inf},
                      {"a_l", to_string(r.a_l)},
                      {"a_r", to_string(r.a_r)},
                      {"a_r_included", r.a_r_included},
                      {"rate_bound", r.rate_bound}});
    } else {
      csv << format_number(to_double(a)) << ',' << r.N_a << ',' << r.p_a << ','
          << format_number(r.lambda_inf) << ',' << format_number(to_double(r.a_l)) << ','
          << format_number(to_double(r.a_r)) << ',' << format_number(r.rate_bound) << '\n';
    }
  }
  if (as_json) {
    std::cout << json{{"tau", to_string(tau)}, {"T", to_string(T)}, {"rows", rows}}.dump(2)
              << '\n';
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int cmd_eigen(const std::string& model, double dx, double tol, long max_iter, long stride,
              bool as_json) {
  ModelDescriptor m = load_model(model);
  if (dx > 0.0) m = with_dx(m, dx);
  const GridAlignment aligned = align_to_grid(m.kernel, m.grid);
  FloquetOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  opts.keep_profile = !as_json;
  const FloquetResult r = floquet_eigen(aligned.kernel, m.grid, opts);
  std::cerr << "lambda " << format_number(r.lambda) << " residual " << format_number(r.residual)
            << " iterations " << r.iterations << '\n';
  if (as_json) {
    std::cout << json{{"lambda", r.lambda},
                      {"residual", r.residual},
                      {"iterations", r.iterations},
                      {"lost_mass", r.lost_mass},
                      {"a", majority_age(aligned.kernel)},
                      {"grid",
                       {{"dx", m.grid.dx()},
                        {"x_max", m.grid.x_max()},
                        {"steps_per_period", m.grid.steps_per_period()}}}}
                     .dump(2)
              << '\n';
    return 0;
  }
  if (stride < 1) throw ModelError("--stride must be >= 1");
  std::string line;
  std::cout << "t,x,N\n";
  for (std::size_t k = 0; k < r.eigenprofile.size(); k += static_cast<std::size_t>(stride)) {
    const DensityField& n = r.eigenprofile[k];
    for (std::size_t j = 0; j < n.values.size(); j += static_cast<std::size_t>(stride)) {
      std::cout << format_number(n.time) << ',' << format_number(m.grid.age(static_cast<long>(j)))
                << ',' << format_number(n.values[j]) << '\n';
    }
  }
  return 0;
}

int cmd_counterexample(double a1, double a2, std::pair<double, double> b1,
                       std::pair<double, double> b2, double alpha, long resolution,
                       bool as_json) {
  const RateSurface s = counterexample_surface(a1, a2, b1, b2, resolution, alpha);
  if (as_json) {
    std::cout << json{{"a1", a1}, {"a2", a2}, {"alpha", alpha},
                      {"b1", s.b1}, {"b2", s.b2}, {"lambda", s.lambda}}
                     .dump(2)
              << '\n';
    return 0;
  }
  std::cout << "b1,b2,lambda\n";
  for (std::size_t i = 0; i < s.b1.size(); ++i) {
    for (std::size_t j = 0; j < s.b2.size(); ++j) {
      std::cout << format_number(s.b1[i]) << ',' << format_number(s.b2[j]) << ','
                << format_number(s.lambda[i][j]) << '\n';
    }
  }
  return 0;
}

int cmd_limits(double a, double tau, double T, const std::vector<double>& eps,
               const std::vector<double>& kappas, long steps, double tol, long max_iter,
               bool as_json) {
  FloquetOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  const LimitsProbe p = noncommuting_limits_probe(a, tau, T, eps, kappas, steps, opts,
                                                  worker_count());
  if (as_json) {
    std::cout << to_json(p).dump(2) << '\n';
    return 0;
  }
  std::cout << "epsilon,kappa,lambda,residual,iterations,status\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    for (std::size_t j = 0; j < kappas.size(); ++j) {
      const SweepRow& r = p.at(i, j);
      std::cout << format_number(eps[i]) << ',' << format_number(kappas[j]) << ','
                << format_number(r.lambda) << ',' << format_number(r.residual) << ','
                << r.iterations << ',' << r.status << '\n';
    }
  }
  std::cerr << "gap " << format_number(p.gap) << " reference " << format_number(p.reference_gap)
            << '\n';
  return 0;
}

int cmd_generations(const std::string& model, double horizon, long j_max, long stride,
                    double factor, bool as_json) {
  const ModelDescriptor m = load_model(model);
  const Kernel k = align_to_grid(m.kernel, m.grid).kernel;
  const double a = majority_age(k);
  DensityField n0 = DensityField::indicator(m.grid, 0.0, a);
  if (as_json) {
    const auto& dk = std::get<DivisionKernel>(k);
    const Kernel k2 = dk.with_kappa(dk.kappa() * factor);
    const OrderingReport rep = stochastic_order_check(k, k2, n0, m.grid, horizon);
    json out{{"holds", rep.holds},
             {"k1_monotone", rep.k1_monotone},
             {"i_max", rep.i_max},
             {"kappa_1", dk.kappa()},
             {"kappa_2", dk.kappa() * factor}};
    if (rep.witness) {
      out["witness"] = {{"j", (*rep.witness)[0]},
                        {"t", (*rep.witness)[1]},
                        {"S_j_1", (*rep.witness)[2]},
                        {"S_j_2", (*rep.witness)[3]}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  if (stride < 1) throw ModelError("--stride must be >= 1");
  const GenerationStack st = solve_generations(n0, k, m.grid, horizon);
  std::cout << "t,j,S_j_direct,S_j_closed_form\n";
  for (long s = 0; s <= st.steps; s += stride) {
    const double t = n0.time + m.grid.time(s);
    for (long j = 1; j <= std::min(j_max, st.i_max); ++j) {
      std::cout << format_number(t) << ',' << j << ',' << format_number(S_tail(st, j, t)) << ','
                << format_number(S_closed_form(st, n0, k, j, t)) << '\n';
    }
  }
  return 0;
}

int cmd_compare(const std::string& model, const std::string& method_a,
                const std::string& method_b, long time_nodes, double tol) {
  const ModelDescriptor m = load_model(model);
  const Kernel k = align_to_grid(m.kernel, m.grid).kernel;
  const auto& dk = std::get<DivisionKernel>(k);
  auto solve = [&](const std::string& method) -> double {
    if (method == "floquet") {
      FloquetOptions opts;
      opts.tol = tol;
      opts.keep_profile = false;
      return floquet_eigen(k, m.grid, opts).lambda;
    }
    if (method == "renewal") return renewal_lambda(dk, time_nodes);
    if (method == "closed_form") {
      if (!dk.psi().is_constant()) throw ModelError("closed_form needs a constant psi");
      return constant_psi_lambda(dk.kappa() * dk.psi().max_value(), dk.B(), dk.a());
    }
    throw ModelError("unknown method '" + method + "' (floquet, renewal, closed_form)");
  };
  const double la = solve(method_a);
  const double lb = solve(method_b);
  std::cout << json{{"method_a", method_a},
                    {"method_b", method_b},
                    {"lambda_a", la},
                    {"lambda_b", lb},
                    {"max_abs_diff", std::abs(la - lb)},
                    {"grid",
                     {{"dx", m.grid.dx()},
                      {"x_max", m.grid.x_max()},
                      {"steps_per_period", m.grid.steps_per_period()}}}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth rates of age-structured populations under periodic division control"};
  app.require_subcommand(1);
  std::string format = "csv";
  int status = 0;

  auto* run = app.add_subcommand("run", "Run an experiment spec or a registered template");
  std::string spec_path, tmpl, out_dir;
  run->add_option("spec", spec_path, "Experiment spec (JSON)");
  run->add_option("--template", tmpl, "Registered template name")
      ->check(CLI::IsMember(template_names()));
  run->add_option("--output-dir", out_dir, "Overrides the spec output directory");
  run->callback([&] {
    if (spec_path.empty() == tmpl.empty()) throw CLI::ValidationError("give a spec or --template");
    status = cmd_run(spec_path, tmpl, out_dir);
  });

  auto* sc = app.add_subcommand("staircase", "Exact staircase limit over a range of a");
  std::string tau_s, T_s = "1", lo_s, hi_s, step_s;
  sc->add_option("--tau", tau_s, "Window length (p/q or decimal)")->required();
  sc->add_option("--T", T_s, "Period");
  sc->add_option("--a-min", lo_s)->required();
  sc->add_option("--a-max", hi_s)->required();
  sc->add_option("--step", step_s)->required();
  sc->add_option("--format", format);
  sc->callback([&] { status = cmd_staircase(tau_s, T_s, lo_s, hi_s, step_s, want_json(format)); });

  auto* eig = app.add_subcommand("eigen", "Floquet eigenvalue and eigenprofile of a model");
  std::string model;
  double dx = 0.0, tol = 1e-10;
  long max_iter = 10000, stride = 1;
  eig->add_option("--model", model, "Model descriptor (JSON)")->required();
  eig->add_option("--dx", dx, "Overrides the model grid spacing");
  eig->add_option("--tol", tol);
  eig->add_option("--max-iter", max_iter);
  eig->add_option("--stride", stride, "Emit every stride-th time and age");
  eig->add_option("--format", format);
  eig->callback([&] { status = cmd_eigen(model, dx, tol, max_iter, stride, want_json(format)); });

  auto* cex = app.add_subcommand("counterexample", "Two-phase growth rate surface");
  double a1 = 10.0, a2 = 0.1, alpha = 0.5;
  std::pair<double, double> b1{0.0, 5.0}, b2{0.0, 5.0};
  long resolution = 51;
  cex->add_option("--a1", a1);
  cex->add_option("--a2", a2);
  cex->add_option("--b1-range", b1, "Low and high b1");
  cex->add_option("--b2-range", b2, "Low and high b2");
  cex->add_option("--alpha", alpha, "Day fraction");
  cex->add_option("--resolution", resolution);
  cex->add_option("--format", format);
  cex->callback(
      [&] { status = cmd_counterexample(a1, a2, b1, b2, alpha, resolution, want_json(format)); });

  auto* lp = app.add_subcommand("limits-probe", "Eigenvalue table over (epsilon, kappa)");
  double pa = 0.22, ptau = 0.6, pT = 1.0;
  std::vector<double> eps{1e-4, 0.05, 0.2}, kappas{50.0, 100.0, 200.0};
  long steps = 1000;
  lp->add_option("--a", pa);
  lp->add_option("--tau", ptau);
  lp->add_option("--T", pT);
  lp->add_option("--eps", eps)->delimiter(',');
  lp->add_option("--kappa", kappas)->delimiter(',');
  lp->add_option("--steps", steps, "Steps per period");
  lp->add_option("--tol", tol);
  lp->add_option("--max-iter", max_iter);
  lp->add_option("--format", format);
  lp->callback([&] {
    status = cmd_limits(pa, ptau, pT, eps, kappas, steps, tol, max_iter, want_json(format));
  });

  auto* gen = app.add_subcommand("generations", "Generation tails S_j, or an ordering check");
  double horizon = 2.0, factor = 2.0;
  long j_max = 5;
  gen->add_option("--model", model)->required();
  gen->add_option("--horizon", horizon);
  gen->add_option("--j-max", j_max);
  gen->add_option("--stride", stride);
  gen->add_option("--factor", factor, "kappa multiplier of the comparison kernel (JSON mode)");
  gen->add_option("--format", format);
  gen->callback([&] {
    status = cmd_generations(model, horizon, j_max, stride, factor, want_json(format));
  });

  auto* cmp = app.add_subcommand("compare", "Eigenvalue of one model by two methods (JSON)");
  std::string ma = "floquet", mb = "renewal";
  long nodes = 400;
  cmp->add_option("--model", model)->required();
  cmp->add_option("--method-a", ma);
  cmp->add_option("--method-b", mb);
  cmp->add_option("--time-nodes", nodes, "Renewal discretization");
  cmp->add_option("--tol", tol);
  cmp->callback([&] { status = cmd_compare(model, ma, mb, nodes, tol); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NonConverged& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
