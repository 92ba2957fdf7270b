#include "fgrowth/descriptor.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>

#include "fgrowth/errors.hpp"

namespace fgrowth {

using nlohmann::json;

namespace {

void check_object(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ModelError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw ModelError("unknown field '" + item.key() + "' in " + where);
  }
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError("missing field '" + std::string(key) + "' in " + where);
  const json& v = j.at(key);
  if (!v.is_number()) throw ModelError("field '" + std::string(key) + "' in " + where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ModelError("field '" + std::string(key) + "' must be finite");
  return d;
}

std::string text(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ModelError("missing string field '" + std::string(key) + "' in " + where);
  }
  return j.at(key).get<std::string>();
}

AgeModulation parse_B(const json& j) {
  const std::string type = text(j, "type", "B");
  if (type == "one") {
    check_object(j, "B", {"type"});
    return AgeModulation::one();
  }
  if (type == "tabulated") {
    check_object(j, "B", {"type", "samples", "spacing", "nondecreasing"});
    if (!j.contains("samples") || !j.at("samples").is_array()) {
      throw ModelError("tabulated B needs a 'samples' array");
    }
    std::vector<double> samples;
    for (const auto& s : j.at("samples")) {
      if (!s.is_number()) throw ModelError("B samples must be numbers");
      samples.push_back(s.get<double>());
    }
    bool nondecreasing = false;
    if (j.contains("nondecreasing")) {
      if (!j.at("nondecreasing").is_boolean()) throw ModelError("'nondecreasing' must be a boolean");
      nondecreasing = j.at("nondecreasing").get<bool>();
    }
    return AgeModulation::tabulated(std::move(samples), number(j, "spacing", "B"), nondecreasing);
  }
  throw ModelError("unknown B type '" + type + "'");
}

}  // namespace

ModelDescriptor parse_model(const json& j) {
  check_object(j, "model", {"kappa", "a", "psi", "B", "grid"});
  const double kappa = number(j, "kappa", "model");
  const double a = number(j, "a", "model");
  if (!(a > 0.0)) throw ModelError("majority age a must be > 0");

  if (!j.contains("grid")) throw ModelError("missing field 'grid' in model");
  const json& g = j.at("grid");
  check_object(g, "grid", {"dx", "x_max", "steps_per_period"});
  const double dx = number(g, "dx", "grid");
  if (!g.contains("steps_per_period") || !g.at("steps_per_period").is_number_integer()) {
    throw ModelError("grid.steps_per_period must be an integer");
  }
  const long steps = g.at("steps_per_period").get<long>();
  if (steps < 1 || !(dx > 0.0)) throw ModelError("grid needs dx > 0 and steps_per_period >= 1");
  const double grid_period = dx * static_cast<double>(steps);

  if (!j.contains("psi")) throw ModelError("missing field 'psi' in model");
  const json& p = j.at("psi");
  const std::string type = text(p, "type", "psi");
  auto check_period = [&](double period) {
    if (std::abs(period - grid_period) > 1e-9 * std::max(1.0, period)) {
      throw ModelError("psi period differs from steps_per_period * dx");
    }
    return grid_period;
  };
  TimeModulation psi = TimeModulation::constant(1.0, grid_period);
  if (type == "constant") {
    check_object(p, "psi", {"type", "level", "period"});
    const double level = p.contains("level") ? number(p, "level", "psi") : 1.0;
    if (p.contains("period")) check_period(number(p, "period", "psi"));
    psi = TimeModulation::constant(level, grid_period);
  } else if (type == "square_wave") {
    check_object(p, "psi", {"type", "tau", "period"});
    const double T = check_period(number(p, "period", "psi"));
    psi = TimeModulation::square_wave(number(p, "tau", "psi"), T);
  } else if (type == "shifted_square_wave") {
    check_object(p, "psi", {"type", "tau", "period", "epsilon"});
    const double T = check_period(number(p, "period", "psi"));
    psi = TimeModulation::shifted_square_wave(number(p, "tau", "psi"), T,
                                              number(p, "epsilon", "psi"));
  } else {
    throw ModelError("unknown psi type '" + type + "'");
  }

  const AgeModulation B = j.contains("B") ? parse_B(j.at("B")) : AgeModulation::one();
  DivisionKernel kernel(kappa, psi, B, a);
  std::optional<double> x_max;
  if (g.contains("x_max")) {
    x_max = number(g, "x_max", "grid");
    if (!(*x_max > a)) throw ModelError("grid.x_max must exceed a");
  }
  Grid grid = x_max ? Grid(grid_period / static_cast<double>(steps), *x_max, steps)
                    : Grid::for_kernel(kernel, steps);
  return {kernel, grid};
}

ModelDescriptor load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_model(j);
}

json to_json(const TimeModulation& psi) {
  if (psi.is_constant()) {
    return {{"type", "constant"}, {"level", psi.max_value()}, {"period", psi.period()}};
  }
  json out{{"type", psi.epsilon() > 0.0 ? "shifted_square_wave" : "square_wave"},
           {"tau", *psi.tau()},
           {"period", psi.period()}};
  if (psi.epsilon() > 0.0) out["epsilon"] = psi.epsilon();
  return out;
}

json to_json(const AgeModulation& B) {
  if (B.is_one()) return {{"type", "one"}};
  return {{"type", "tabulated"},
          {"samples", B.samples()},
          {"spacing", B.spacing()},
          {"nondecreasing", B.nondecreasing()}};
}

json to_json(const DivisionKernel& k, const Grid& grid) {
  return {{"kappa", k.kappa()},
          {"a", k.a()},
          {"psi", to_json(k.psi())},
          {"B", to_json(k.B())},
          {"grid",
           {{"dx", grid.dx()}, {"x_max", grid.x_max()}, {"steps_per_period", grid.steps_per_period()}}}};
}

}  // namespace fgrowth
