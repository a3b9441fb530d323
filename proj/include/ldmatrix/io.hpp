#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldmatrix/ensemble.hpp"
#include "ldmatrix/spectral.hpp"

namespace ldmatrix {

using Json = nlohmann::ordered_json;

// Ensemble declaration: either an inline document
//   {"dim":2,"cone":"nonnegative_c","norm":"one",
//    "law":{"type":"finite","atoms":[{"matrix":[[2,1],[1,1]],"p":0.5},...]},
//    "shift":{"vector":[1,0]},            (optional)
//    "quadrature":{"count":4096,"seed":0}} (optional, parametric laws)
// or a preset reference: "e3" / {"preset":"arch2","a1":0.3,"a2":0.25}.
MatrixEnsemble ensemble_from_json(const Json& j);
Json ensemble_to_json(const MatrixEnsemble& ens);

Json condition_report_to_json(const ConditionReport& rep);
Json spectral_profile_to_json(const SpectralProfile& prof);

// Full-precision scientific notation (17 significant digits).
std::string csv_number(double v);

// Writes a numeric table. format "csv" appends .csv (comma-separated,
// header row, %.16e cells); format "json" appends .json (array of
// objects keyed by header). Returns the file name written.
std::string write_table(const std::filesystem::path& dir,
                        const std::string& base_name,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows,
                        const std::string& format);

Json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace ldmatrix
