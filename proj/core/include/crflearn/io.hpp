#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crflearn/datagen.hpp"
#include "crflearn/model.hpp"

namespace crflearn {

/// Model file: one JSON object
///   { "cardinalities": [...], "features": [ { "states": [[var,val],...],
///     "weight": w }, ... ] }
/// with features in canonical order.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path,
                 CandidatePolicy policy = CandidatePolicy::NonReferenceStates);

/// Dataset file: JSON Lines. Line 1 is the schema header
///   { "cardinalities": [...] }
/// followed by one object per instance:
///   { "values": [...], "hidden": [varIndex, ...] }.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Ground-truth edge list: CSV "varA,varB,weight".
void save_edges_csv(const std::vector<Edge>& edges, const std::filesystem::path& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double value);

}  // namespace crflearn
