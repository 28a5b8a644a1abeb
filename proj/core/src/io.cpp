#include "crflearn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace crflearn {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

json parse(const std::string& text, const std::filesystem::path& path) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("malformed JSON in " + path.string());
  return j;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::vector<std::size_t> order(model.feature_count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return model.feature(a) < model.feature(b); });

  json j;
  j["cardinalities"] = model.schema().cardinalities();
  json features = json::array();
  for (std::size_t r : order) {
    json states = json::array();
    for (const State& st : model.feature(r).states()) {
      states.push_back(json::array({st.variable, st.value}));
    }
    features.push_back(json{{"states", std::move(states)}, {"weight", model.weight(r)}});
  }
  j["features"] = std::move(features);
  open_out(path) << j.dump(2) << "\n";
}

Model load_model(const std::filesystem::path& path, CandidatePolicy policy) {
  std::ifstream in = open_in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = parse(text, path);
  try {
    VariableSchema schema(j.at("cardinalities").get<std::vector<int>>());
    std::vector<Feature> features;
    std::vector<double> weights;
    for (const json& f : j.at("features")) {
      std::vector<State> states;
      for (const json& st : f.at("states")) {
        states.push_back(State{st.at(0).get<int>(), st.at(1).get<int>()});
      }
      Feature feature = Feature::from_states(states);
      if (feature.states() != states) {
        throw std::runtime_error("feature states not in canonical order");
      }
      features.push_back(std::move(feature));
      weights.push_back(f.at("weight").get<double>());
    }
    Model model = activate_features(Model(schema, policy), features);
    std::vector<double> aligned(model.feature_count(), 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      aligned[*model.find(features[i])] = weights[i];
    }
    return model.with_weights(std::move(aligned));
  } catch (const json::exception& e) {
    throw std::runtime_error("bad model file " + path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << json{{"cardinalities", data.schema().cardinalities()}}.dump() << "\n";
  for (const Instance& inst : data.instances()) {
    json hidden = json::array();
    for (std::size_t k = 0; k < inst.hidden.size(); ++k) {
      if (inst.hidden[k]) hidden.push_back(static_cast<int>(k));
    }
    out << json{{"values", inst.values}, {"hidden", std::move(hidden)}}.dump() << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file " + path.string());
  try {
    json header = parse(line, path);
    VariableSchema schema(header.at("cardinalities").get<std::vector<int>>());
    std::vector<Instance> instances;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = parse(line, path);
      Instance inst;
      inst.values = j.at("values").get<std::vector<int>>();
      inst.hidden.assign(schema.variable_count(), 0);
      for (const json& k : j.at("hidden")) {
        const int var = k.get<int>();
        if (var < 0 || var >= schema.variable_count()) {
          throw std::runtime_error("hidden index outside schema");
        }
        inst.hidden[var] = 1;
      }
      instances.push_back(std::move(inst));
    }
    return Dataset(std::move(schema), std::move(instances));
  } catch (const json::exception& e) {
    throw std::runtime_error("bad dataset file " + path.string() + ": " + e.what());
  }
}

void save_edges_csv(const std::vector<Edge>& edges, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "varA,varB,weight\n";
  for (const Edge& e : edges) {
    out << e.a << "," << e.b << "," << format_double(e.weight) << "\n";
  }
}

}  // namespace crflearn
