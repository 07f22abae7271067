#include "xlabel/ebm.hpp"
#include "xlabel/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace xlabel::ebm {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "xlabel-ebm";
constexpr int kVersion = 1;

double finite_number(const json& j, const char* what) {
    if (!j.is_number()) {
        throw DeserializeError(std::string(what) + " must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw DeserializeError(std::string(what) + " must be finite");
    }
    return v;
}

std::vector<double> number_array(const json& j, const char* what) {
    if (!j.is_array()) {
        throw DeserializeError(std::string(what) + " must be an array");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        out.push_back(finite_number(v, what));
    }
    return out;
}

} // namespace

std::string serialize(const EbmModel& model) {
    json features = json::array();
    for (std::size_t i = 0; i < model.feature_count(); ++i) {
        features.push_back({
            {"name", model.feature_names()[i]},
            {"cuts", model.bins().feature(i).cuts},
            {"scores", model.shapes()[i].scores},
        });
    }
    const TrainConfig& c = model.train_config();
    const json doc = {
        {"format", kFormat},
        {"version", kVersion},
        {"intercept", model.intercept()},
        {"features", std::move(features)},
        {"config",
         {
             {"max_bins", c.max_bins},
             {"learning_rate", c.learning_rate},
             {"n_rounds", c.n_rounds},
             {"early_stop_patience", c.early_stop_patience},
             {"holdout_fraction", c.holdout_fraction},
             {"seed", c.seed},
         }},
    };
    return doc.dump();
}

EbmModel deserialize(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw DeserializeError(std::string("model is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kFormat) {
        throw DeserializeError("not an xlabel-ebm model document");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != kVersion) {
        throw DeserializeError("unsupported model version");
    }
    try {
        const double intercept = finite_number(doc.at("intercept"), "intercept");
        std::vector<std::string> names;
        std::vector<FeatureBins> bins;
        std::vector<ShapeFunction> shapes;
        for (const auto& f : doc.at("features")) {
            names.push_back(f.at("name").get<std::string>());
            FeatureBins fb{number_array(f.at("cuts"), "cuts")};
            ShapeFunction shape{number_array(f.at("scores"), "scores")};
            if (shape.scores.size() != fb.bin_count()) {
                throw DeserializeError("feature '" + names.back() + "' has " +
                                       std::to_string(shape.scores.size()) + " scores for " +
                                       std::to_string(fb.bin_count()) + " bins");
            }
            bins.push_back(std::move(fb));
            shapes.push_back(std::move(shape));
        }
        const json& cj = doc.at("config");
        TrainConfig config;
        config.max_bins = cj.at("max_bins").get<std::size_t>();
        config.learning_rate = cj.at("learning_rate").get<double>();
        config.n_rounds = cj.at("n_rounds").get<std::size_t>();
        config.early_stop_patience = cj.at("early_stop_patience").get<std::size_t>();
        config.holdout_fraction = cj.at("holdout_fraction").get<double>();
        config.seed = cj.at("seed").get<std::uint64_t>();
        config.validate();
        return EbmModel(std::move(names), BinMap(std::move(bins)), intercept, std::move(shapes), config);
    } catch (const DeserializeError&) {
        throw;
    } catch (const json::exception& e) {
        throw DeserializeError(std::string("malformed model document: ") + e.what());
    } catch (const InvalidInput& e) {
        throw DeserializeError(std::string("inconsistent model document: ") + e.what());
    }
}

} // namespace xlabel::ebm
