#include "bfm/instance_io.hpp"

#include <fstream>
#include <sstream>

#include "bfm/errors.hpp"
#include "json.hpp"

namespace bfm {

namespace {

using nlohmann::json;

Valuation valuation_from_json(int n, const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const json& params = j.at("params");
  if (kind == "additive") {
    return Valuation::additive(params.at("weights").get<std::vector<double>>());
  }
  if (kind == "xos") {
    return Valuation::xos(n, params.at("clauses").get<std::vector<std::vector<double>>>());
  }
  if (kind == "coverage") {
    return Valuation::coverage(n, params.at("point_weights").get<std::vector<double>>(),
                               params.at("covers").get<std::vector<std::vector<int>>>());
  }
  if (kind == "explicit-table") {
    Valuation v = Valuation::table(n, params.at("values").get<std::vector<double>>());
    const StructureReport report = check_structure(v);
    if (!report.all_ok()) {
      throw MalformedInputError(std::string("explicit table rejected: ") +
                                (!report.normalized ? "not normalized"
                                 : !report.monotone ? "not monotone"
                                                    : "not subadditive"));
    }
    return v;
  }
  if (kind == "budget-additive") {
    return Valuation::budget_additive(params.at("weights").get<std::vector<double>>(),
                                      params.at("cap").get<double>());
  }
  throw MalformedInputError("unknown valuation kind: " + kind);
}

json valuation_to_json(const Valuation& v) {
  json j;
  json params;
  switch (v.kind()) {
    case Valuation::Kind::Additive:
      j["kind"] = "additive";
      params["weights"] = v.weights();
      break;
    case Valuation::Kind::Xos:
      j["kind"] = "xos";
      params["clauses"] = v.clauses();
      break;
    case Valuation::Kind::BudgetAdditive:
      j["kind"] = "budget-additive";
      params["weights"] = v.weights();
      params["cap"] = v.cap();
      break;
    case Valuation::Kind::Table:
      j["kind"] = "explicit-table";
      params["values"] = v.raw_table();
      break;
    case Valuation::Kind::Coverage:
      j["kind"] = "coverage";
      params["point_weights"] = v.point_weights();
      params["covers"] = v.covers();
      break;
  }
  j["params"] = params;
  return j;
}

}  // namespace

Instance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedInputError(std::string("instance parse error: ") + e.what());
  }
  try {
    Instance inst;
    const int n = j.at("n").get<int>();
    inst.valuation = valuation_from_json(n, j.at("valuation"));
    if (inst.valuation.n() != n) throw MalformedInputError("valuation size does not match n");
    inst.grid.budget = j.at("budget").get<double>();
    inst.grid.bits = j.at("bits_s").get<int>();
    inst.true_cost_units = j.at("true_costs").get<std::vector<std::int64_t>>();
    if (j.contains("epsilon")) inst.epsilon = j.at("epsilon").get<double>();
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw MalformedInputError(std::string("instance field error: ") + e.what());
  }
}

std::string instance_to_json(const Instance& instance) {
  json j;
  j["n"] = instance.n();
  j["valuation"] = valuation_to_json(instance.valuation);
  j["true_costs"] = instance.true_cost_units;
  j["budget"] = instance.grid.budget;
  j["bits_s"] = instance.grid.bits;
  j["epsilon"] = instance.epsilon;
  return j.dump(2);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInputError("cannot open instance file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MalformedInputError("cannot write instance file: " + path);
  out << instance_to_json(instance) << "\n";
}

}  // namespace bfm
