#pragma once

#include <string>

#include "hmill/encode.hpp"
#include "hmill/io.hpp"
#include "hmill/model.hpp"

namespace hmill {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to score raw documents: extractor, class names, model,
/// plus free-form metadata (training configuration).
struct ModelBundle {
  ExtractorTree extractor;
  LabelVocabulary labels;
  ModelNode model;
  Json meta = Json::object();
};

Json model_to_json(const ModelNode& model);
/// Throws FormatError whose message starts with the JSON path of the
/// offending field, e.g. "model.layers[0].weights[1][2]".
ModelNode model_from_json(const Json& j, const std::string& path = "model");

Json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const Json& j);

/// Atomic write of a single JSON document.
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace hmill
