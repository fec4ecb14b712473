#include "psprs/model_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "psprs/error.hpp"

namespace psprs {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string grm_to_json(const GrModel& model) {
  json doc;
  doc["format"] = "psprs-grm";
  doc["version"] = 1;
  doc["scheme"] = model.scheme;
  doc["latent_prior"] = "N(0,1)";
  doc["items"] = json::array();
  for (std::size_t k = 0; k < model.items.size(); ++k) {
    const auto& it = model.items[k];
    json j;
    j["name"] = it.name;
    if (k < kItemCount) j["column"] = std::string(kItemColumns[k]);
    j["discrimination"] = it.discrimination;
    j["thresholds"] = it.thresholds;
    if (!it.score_map.empty()) j["score_map"] = it.score_map;
    doc["items"].push_back(j);
  }
  doc["fit"] = {{"log_likelihood", model.fit.log_likelihood}, {"iterations", model.fit.iterations},
                {"rows", model.fit.rows},                     {"converged", model.fit.converged},
                {"quadrature_nodes", model.fit.quadrature_nodes}, {"notes", model.fit.notes}};
  return doc.dump(2);
}

GrModel grm_from_json(const std::string& text) {
  const json doc = parse(text, "GrModel document");
  GrModel model;
  try {
    if (doc.at("format").get<std::string>() != "psprs-grm") throw InputError("GrModel document: wrong format tag");
    if (doc.at("version").get<int>() != 1) throw InputError("GrModel document: unsupported version");
    model.scheme = doc.at("scheme").get<std::string>();
    for (const auto& j : doc.at("items")) {
      GrItemParams it;
      it.name = j.at("name").get<std::string>();
      it.discrimination = j.at("discrimination").get<double>();
      it.thresholds = j.at("thresholds").get<std::vector<double>>();
      if (j.contains("score_map")) it.score_map = j.at("score_map").get<std::vector<int>>();
      model.items.push_back(std::move(it));
    }
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      model.fit.log_likelihood = f.value("log_likelihood", 0.0);
      model.fit.iterations = f.value("iterations", 0);
      model.fit.rows = f.value("rows", std::size_t{0});
      model.fit.converged = f.value("converged", false);
      model.fit.quadrature_nodes = f.value("quadrature_nodes", 0);
      model.fit.notes = f.value("notes", std::vector<std::string>{});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("GrModel document: ") + e.what());
  }
  model.validate();
  return model;
}

void save_grm(const GrModel& model, const std::string& path) { write_file(path, grm_to_json(model) + "\n"); }
GrModel load_grm(const std::string& path) { return grm_from_json(read_file(path)); }

std::string approx_to_json(const LinearLatentApprox& approx) {
  json doc;
  doc["format"] = "psprs-latent-approx";
  doc["version"] = 1;
  doc["scheme"] = approx.scheme;
  doc["transform"] = "logistic fit, logit back-transform";
  doc["intercept"] = approx.intercept;
  doc["weights"] = json::object();
  for (std::size_t k = 0; k < kItemCount; ++k) doc["weights"][std::string(kItemColumns[k])] = approx.weights[k];
  doc["r_squared"] = approx.r_squared;
  return doc.dump(2);
}

LinearLatentApprox approx_from_json(const std::string& text) {
  const json doc = parse(text, "latent approximation document");
  LinearLatentApprox out;
  try {
    if (doc.at("format").get<std::string>() != "psprs-latent-approx") throw InputError("latent approximation: wrong format tag");
    out.scheme = doc.at("scheme").get<std::string>();
    out.intercept = doc.at("intercept").get<double>();
    for (std::size_t k = 0; k < kItemCount; ++k) out.weights[k] = doc.at("weights").at(std::string(kItemColumns[k])).get<double>();
    out.r_squared = doc.value("r_squared", 0.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("latent approximation document: ") + e.what());
  }
  return out;
}

void save_approx(const LinearLatentApprox& approx, const std::string& path) { write_file(path, approx_to_json(approx) + "\n"); }
LinearLatentApprox load_approx(const std::string& path) { return approx_from_json(read_file(path)); }

}  // namespace psprs
