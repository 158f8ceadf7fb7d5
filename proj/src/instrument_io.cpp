#include "qtraj/instrument_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qtraj {

namespace {

using nlohmann::json;

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& rows, int d) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != d)
    throw ParseError("matrix: expected " + std::to_string(d) + " rows");
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw ParseError("matrix: row " + std::to_string(i) + " malformed");
    for (int j = 0; j < d; ++j) {
      const json& e = row[j];
      if (!e.is_array() || e.size() != 2)
        throw ParseError("matrix: entries must be [re, im] pairs");
      m(i, j) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

}  // namespace

InstrumentFile parse_instrument(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("instrument file: ") + e.what());
  }
  if (!doc.contains("dim") || !doc["dim"].is_number_integer())
    throw ParseError("instrument file: missing integer field 'dim'");
  const int d = doc["dim"].get<int>();
  if (d < 1) throw ParseError("instrument file: dim must be >= 1");

  if (doc.contains("perfect_ops")) {
    std::vector<CMatrix> ops;
    std::vector<std::string> op_names;
    for (const json& entry : doc["perfect_ops"]) {
      if (!entry.contains("matrix"))
        throw ParseError("perfect_ops: entry missing 'matrix'");
      op_names.push_back(entry.value("name", ""));
      ops.push_back(matrix_from_json(entry["matrix"], d));
    }
    if (ops.empty()) throw ParseError("perfect_ops: empty list");

    RMatrix eta_mat;
    if (doc.contains("eta")) {
      const json& rows = doc["eta"];
      const int m = static_cast<int>(rows.size());
      eta_mat.resize(m, static_cast<Eigen::Index>(ops.size()));
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != static_cast<int>(ops.size()))
          throw ParseError("eta: row length must match perfect_ops count");
        for (int j = 0; j < static_cast<int>(ops.size()); ++j)
          eta_mat(i, j) = rows[i][j].get<double>();
      }
    } else {
      eta_mat = RMatrix::Identity(ops.size(), ops.size());
    }

    std::vector<std::string> labels;
    if (doc.contains("labels"))
      for (const json& l : doc["labels"]) labels.push_back(l.get<std::string>());

    InstrumentFile f{Instrument::from_bias(ops, BiasMatrix(eta_mat), labels),
                     std::move(ops), eta_mat};
    return f;
  }

  if (doc.contains("outcomes")) {
    std::vector<OutcomeMap> outs;
    for (const json& entry : doc["outcomes"]) {
      if (!entry.contains("label") || !entry.contains("kraus"))
        throw ParseError("outcomes: entry needs 'label' and 'kraus'");
      std::vector<CMatrix> kraus;
      for (const json& k : entry["kraus"]) kraus.push_back(matrix_from_json(k, d));
      outs.push_back(make_map(entry["label"].get<std::string>(), std::move(kraus)));
    }
    return InstrumentFile{Instrument(d, std::move(outs)), {}, std::nullopt};
  }

  throw ParseError("instrument file: need 'perfect_ops' or 'outcomes'");
}

InstrumentFile load_instrument(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instrument file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instrument(ss.str());
}

std::string serialize_instrument(const InstrumentFile& f) {
  json doc;
  doc["dim"] = f.instrument.dim();
  if (!f.perfect_ops.empty()) {
    json ops = json::array();
    for (std::size_t j = 0; j < f.perfect_ops.size(); ++j) {
      json entry;
      entry["name"] = "V" + std::to_string(j + 1);
      entry["matrix"] = matrix_to_json(f.perfect_ops[j]);
      ops.push_back(std::move(entry));
    }
    doc["perfect_ops"] = std::move(ops);
    if (f.eta) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < f.eta->rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < f.eta->cols(); ++j)
          row.push_back((*f.eta)(i, j));
        rows.push_back(std::move(row));
      }
      doc["eta"] = std::move(rows);
    }
    json labels = json::array();
    for (const OutcomeMap& o : f.instrument.outcomes()) labels.push_back(o.label);
    doc["labels"] = std::move(labels);
  } else {
    json outs = json::array();
    for (const OutcomeMap& o : f.instrument.outcomes()) {
      json entry;
      entry["label"] = o.label;
      json kraus = json::array();
      for (const CMatrix& k : o.kraus) kraus.push_back(matrix_to_json(k));
      entry["kraus"] = std::move(kraus);
      outs.push_back(std::move(entry));
    }
    doc["outcomes"] = std::move(outs);
  }
  return doc.dump(2) + "\n";
}

void save_instrument(const InstrumentFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write instrument file: " + path);
  out << serialize_instrument(f);
}

std::uint64_t instrument_hash(const InstrumentFile& f) {
  std::string s = serialize_instrument(f);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace qtraj
