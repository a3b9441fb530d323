#include "ldmatrix/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldmatrix/errors.hpp"

namespace ldmatrix {

namespace {

Matrix matrix_from_json(const Json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ValidationError("config: matrix must be a dim x dim array");
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const Json& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw ValidationError("config: matrix row has wrong length");
    for (int c = 0; c < dim; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

MatrixEnsemble preset_by_name(const std::string& name, const Json& j) {
  auto param = [&](const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
  };
  if (name == "two_point") return preset_two_point();
  if (name == "e3") return preset_e3();
  if (name == "e4") return preset_e4();
  if (name == "lognormal")
    return preset_lognormal(param("m", -0.5), param("v", 1.0));
  if (name == "logexp")
    return preset_logexp(param("rate", 1.0), param("c", 1.5));
  if (name == "arch2")
    return preset_arch2(param("a1", 0.3), param("a2", 0.25),
                        j.contains("transpose") &&
                            j.at("transpose").get<bool>());
  throw ValidationError("config: unknown preset '" + name + "'");
}

}  // namespace

MatrixEnsemble ensemble_from_json(const Json& j) {
  if (j.is_string()) return preset_by_name(j.get<std::string>(), Json::object());
  if (!j.is_object())
    throw ValidationError("config: ensemble must be an object or preset name");
  if (j.contains("preset"))
    return preset_by_name(j.at("preset").get<std::string>(), j);

  MatrixEnsemble ens;
  ens.dim = j.at("dim").get<int>();
  const std::string cone = j.at("cone").get<std::string>();
  if (cone == "nonnegative_c")
    ens.cone = Cone::kNonnegative;
  else if (cone == "invertible_c")
    ens.cone = Cone::kInvertible;
  else
    throw ValidationError("config: cone must be nonnegative_c or invertible_c");
  const std::string norm =
      j.contains("norm") ? j.at("norm").get<std::string>()
                         : (ens.cone == Cone::kNonnegative ? "one" : "two");
  if (norm == "one")
    ens.norm = NormKind::kOne;
  else if (norm == "two")
    ens.norm = NormKind::kTwo;
  else
    throw ValidationError("config: norm must be one or two");

  const Json& law = j.at("law");
  const std::string type = law.at("type").get<std::string>();
  if (type == "finite") {
    ens.law_type = LawType::kFinite;
    for (const Json& aj : law.at("atoms")) {
      Atom atom;
      atom.a = matrix_from_json(aj.at("matrix"), ens.dim);
      atom.p = aj.at("p").get<double>();
      ens.atoms.push_back(std::move(atom));
    }
  } else if (type == "scalar_lognormal") {
    ens.law_type = LawType::kScalarLognormal;
    ens.params["m"] = law.at("m").get<double>();
    ens.params["v"] = law.at("v").get<double>();
  } else if (type == "scalar_logexp") {
    ens.law_type = LawType::kScalarLogexp;
    ens.params["rate"] = law.at("rate").get<double>();
    ens.params["shift_c"] = law.at("c").get<double>();
  } else if (type == "arch2") {
    ens.law_type = LawType::kArch2;
    ens.params["a1"] = law.at("a1").get<double>();
    ens.params["a2"] = law.at("a2").get<double>();
  } else if (type == "entrywise_lognormal") {
    ens.law_type = LawType::kEntrywiseLognormal;
    ens.params["m"] = law.at("m").get<double>();
    ens.params["v"] = law.at("v").get<double>();
  } else {
    throw ValidationError("config: unknown law type '" + type + "'");
  }
  if (law.contains("transpose")) ens.transpose_law = law.at("transpose").get<bool>();

  if (j.contains("shift")) {
    const Json& sj = j.at("shift");
    const Json& vec = sj.is_object() ? sj.at("vector") : sj;
    if (!vec.is_array() || static_cast<int>(vec.size()) != ens.dim)
      throw ValidationError("config: shift vector has wrong length");
    ens.has_shift = true;
    ens.shift = Vector(ens.dim);
    for (int i = 0; i < ens.dim; ++i) ens.shift[i] = vec.at(i).get<double>();
  }
  if (j.contains("quadrature")) {
    const Json& qj = j.at("quadrature");
    if (qj.contains("count")) ens.quad_count = qj.at("count").get<std::size_t>();
    if (qj.contains("seed")) ens.quad_seed = qj.at("seed").get<std::uint64_t>();
  }
  if (j.contains("name")) ens.name = j.at("name").get<std::string>();
  validate_ensemble(ens);
  return ens;
}

Json ensemble_to_json(const MatrixEnsemble& ens) {
  Json j;
  j["name"] = ens.name;
  j["dim"] = ens.dim;
  j["cone"] =
      ens.cone == Cone::kNonnegative ? "nonnegative_c" : "invertible_c";
  j["norm"] = ens.norm == NormKind::kOne ? "one" : "two";
  Json law;
  switch (ens.law_type) {
    case LawType::kFinite: {
      law["type"] = "finite";
      Json atoms = Json::array();
      for (const auto& atom : ens.atoms) {
        Json aj;
        aj["matrix"] = matrix_to_json(atom.a);
        aj["p"] = atom.p;
        atoms.push_back(aj);
      }
      law["atoms"] = atoms;
      break;
    }
    case LawType::kScalarLognormal:
      law["type"] = "scalar_lognormal";
      law["m"] = ens.params.at("m");
      law["v"] = ens.params.at("v");
      break;
    case LawType::kScalarLogexp:
      law["type"] = "scalar_logexp";
      law["rate"] = ens.params.at("rate");
      law["c"] = ens.params.at("shift_c");
      break;
    case LawType::kArch2:
      law["type"] = "arch2";
      law["a1"] = ens.params.at("a1");
      law["a2"] = ens.params.at("a2");
      break;
    case LawType::kEntrywiseLognormal:
      law["type"] = "entrywise_lognormal";
      law["m"] = ens.params.at("m");
      law["v"] = ens.params.at("v");
      break;
  }
  if (ens.transpose_law) law["transpose"] = true;
  j["law"] = law;
  if (ens.has_shift) {
    Json vec = Json::array();
    for (int i = 0; i < ens.dim; ++i) vec.push_back(ens.shift[i]);
    j["shift"] = Json{{"vector", vec}};
  }
  if (ens.law_type != LawType::kFinite) {
    j["quadrature"] =
        Json{{"count", ens.quad_count}, {"seed", ens.quad_seed}};
  }
  return j;
}

Json condition_report_to_json(const ConditionReport& rep) {
  Json j;
  j["allowable_all"] = rep.allowable_all;
  j["positive_exists"] = rep.positive_exists;
  j["positive_length"] = rep.positive_length;
  j["proximality_hint"] = rep.proximality_hint;
  j["arithmetic_diagnostic"] =
      rep.arithmetic == ArithmeticStatus::kNonArithmeticCertified
          ? "NonArithmeticCertified"
          : "Inconclusive";
  j["witness"] = Json{{"log_ratio", rep.log_ratio},
                      {"best_p", rep.best_p},
                      {"best_q", rep.best_q},
                      {"rational_distance", rep.rational_distance}};
  j["notes"] = rep.notes;
  return j;
}

Json spectral_profile_to_json(const SpectralProfile& prof) {
  Json j;
  j["s"] = prof.s;
  j["k"] = prof.k;
  j["log_k"] = prof.log_k;
  j["q"] = prof.q;
  j["sigma2"] = prof.sigma2;
  j["m3"] = prof.m3;
  j["fd_step"] = prof.fd_step;
  j["eigen_residual"] = prof.eigen_residual;
  Json nodes = Json::array();
  for (const auto& node : prof.grid.nodes) {
    Json coords = Json::array();
    for (int i = 0; i < node.size(); ++i) coords.push_back(node[i]);
    nodes.push_back(coords);
  }
  j["grid_nodes"] = nodes;
  j["e_s"] = prof.e_s;
  j["nu_s"] = prof.nu_s;
  j["pi_s"] = prof.pi_s;
  return j;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string write_table(const std::filesystem::path& dir,
                        const std::string& base_name,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows,
                        const std::string& format) {
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ValidationError("write_table: row width mismatch");
  }
  if (format == "csv") {
    const std::string name = base_name + ".csv";
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ValidationError("write_table: cannot open " + name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out << ',';
      out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << csv_number(row[i]);
      }
      out << '\n';
    }
    return name;
  }
  if (format == "json") {
    const std::string name = base_name + ".json";
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json obj;
      for (std::size_t i = 0; i < row.size(); ++i) obj[header[i]] = row[i];
      arr.push_back(obj);
    }
    write_json_file(dir / name, arr);
    return name;
  }
  throw ValidationError("write_table: format must be csv or json");
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ValidationError("cannot open output file " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ldmatrix
