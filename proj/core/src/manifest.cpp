#include "dysflm/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dysflm/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dysflm {

std::string_view decoder_mode_name(DecoderMode m) {
  switch (m) {
    case DecoderMode::OneBest: return "1-best";
    case DecoderMode::NBest: return "N-best";
    case DecoderMode::Phon: return "Phon";
    case DecoderMode::Mbr: return "MBR";
  }
  return "?";
}

DecoderMode parse_decoder_mode(std::string_view name) {
  if (name == "1-best") return DecoderMode::OneBest;
  if (name == "N-best") return DecoderMode::NBest;
  if (name == "Phon") return DecoderMode::Phon;
  if (name == "MBR") return DecoderMode::Mbr;
  throw ConfigError("unknown decoder mode: " + std::string(name));
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  throw DataError("unknown split: " + std::string(name));
}

bool ClipExample::has_mode(DecoderMode m) const {
  switch (m) {
    case DecoderMode::OneBest: return hyp_1best.has_value();
    case DecoderMode::NBest: return hyp_nbest.has_value();
    case DecoderMode::Phon: return hyp_phon.has_value();
    case DecoderMode::Mbr: return hyp_mbr.has_value();
  }
  return false;
}

std::vector<const ClipExample*> Manifest::split_clips(Split s) const {
  std::vector<const ClipExample*> out;
  for (const auto& c : clips)
    if (c.split == s) out.push_back(&c);
  return out;
}

void Manifest::validate() const {
  std::set<std::string> ids;
  std::vector<std::string> offenders;
  for (const auto& c : clips) {
    if (!ids.insert(c.id).second) offenders.push_back(c.id + ": duplicate id");
    if (!c.labels.valid_under(schema))
      offenders.push_back(c.id + ": label outside schema " +
                          std::string(schema_name(schema)));
    if (!c.has_mode(DecoderMode::OneBest) && !c.has_mode(DecoderMode::NBest) &&
        !c.has_mode(DecoderMode::Phon) && !c.has_mode(DecoderMode::Mbr))
      offenders.push_back(c.id + ": no hypothesis mode present");
  }
  if (!offenders.empty()) {
    std::string msg = "manifest validation failed:";
    for (const auto& o : offenders) msg += "\n  " + o;
    throw DataError(msg);
  }
}

void atomic_write_text(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

void save_feature_matrix(const Eigen::MatrixXf& m, const std::string& path) {
  std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw DataError("cannot write " + tmp);
  out.write("DYSFEAT1", 8);
  std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      float v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  out.close();
  fs::rename(tmp, path);
}

Eigen::MatrixXf load_feature_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "DYSFEAT1")
    throw DataError("bad feature file magic in " + path);
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  Eigen::MatrixXf m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      float v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      m(i, j) = v;
    }
  if (!in) throw DataError("truncated feature file " + path);
  return m;
}

namespace {

json hyp_list_to_json(const std::vector<TextHypothesis>& hyps) {
  json arr = json::array();
  for (const auto& h : hyps)
    arr.push_back({{"tokens", h.tokens}, {"log_prob", h.log_prob}});
  return arr;
}

std::vector<TextHypothesis> hyp_list_from_json(const json& arr) {
  std::vector<TextHypothesis> out;
  for (const auto& e : arr)
    out.push_back({e.at("tokens").get<std::vector<std::string>>(),
                   e.at("log_prob").get<double>()});
  return out;
}

}  // namespace

void save_manifest(const Manifest& manifest, const std::string& path,
                   bool inline_features) {
  manifest.validate();
  fs::path dir = fs::path(path).parent_path();
  std::ostringstream out;
  for (const auto& c : manifest.clips) {
    json j;
    j["id"] = c.id;
    j["schema"] = std::string(schema_name(manifest.schema));
    j["split"] = std::string(split_name(c.split));
    j["transcript"] = c.transcript;
    if (c.hyp_1best) j["hyp_1best"] = *c.hyp_1best;
    if (c.hyp_nbest) j["hyp_nbest"] = hyp_list_to_json(*c.hyp_nbest);
    if (c.hyp_phon) j["hyp_phon"] = *c.hyp_phon;
    if (c.hyp_mbr) j["hyp_mbr"] = *c.hyp_mbr;
    json labels = json::array();
    for (auto cls : c.labels.members()) labels.push_back(std::string(class_tag(cls)));
    j["labels"] = labels;
    if (inline_features || c.features_path.empty()) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < c.features.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < c.features.cols(); ++k)
          row.push_back(c.features(i, k));
        rows.push_back(std::move(row));
      }
      j["features"] = rows;
    } else {
      j["features_path"] = c.features_path;
      save_feature_matrix(c.features, (dir / c.features_path).string());
    }
    out << j.dump() << "\n";
  }
  atomic_write_text(path, out.str());
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  fs::path dir = fs::path(path).parent_path();
  Manifest m;
  bool schema_set = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("manifest " + path + " line " + std::to_string(lineno) +
                      ": " + e.what());
    }
    ClipExample c;
    c.id = j.at("id").get<std::string>();
    Schema rec_schema = parse_schema(j.at("schema").get<std::string>());
    if (!schema_set) {
      m.schema = rec_schema;
      schema_set = true;
    } else if (rec_schema != m.schema) {
      throw DataError("manifest: record " + c.id + " schema differs");
    }
    c.split = parse_split(j.at("split").get<std::string>());
    c.transcript = j.at("transcript").get<std::vector<std::string>>();
    if (j.contains("hyp_1best"))
      c.hyp_1best = j["hyp_1best"].get<std::vector<std::string>>();
    if (j.contains("hyp_nbest")) c.hyp_nbest = hyp_list_from_json(j["hyp_nbest"]);
    if (j.contains("hyp_phon"))
      c.hyp_phon = j["hyp_phon"].get<std::vector<std::string>>();
    if (j.contains("hyp_mbr"))
      c.hyp_mbr = j["hyp_mbr"].get<std::vector<std::string>>();
    for (const auto& tag : j.at("labels")) {
      std::string t = tag.get<std::string>();
      bool known = false;
      for (auto cls : kAllClasses)
        if (t == class_tag(cls)) {
          if (!class_in_schema(cls, m.schema))
            throw DataError("manifest: record " + c.id + " label " + t +
                            " not valid under schema " +
                            std::string(schema_name(m.schema)));
          c.labels.add(cls);
          known = true;
        }
      if (!known)
        throw DataError("manifest: record " + c.id + " unknown label tag " + t);
    }
    if (j.contains("features")) {
      const auto& rows = j["features"];
      Eigen::Index r = static_cast<Eigen::Index>(rows.size());
      Eigen::Index cdim = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
      c.features.resize(r, cdim);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < cdim; ++k)
          c.features(i, k) = rows[i][static_cast<std::size_t>(k)].get<float>();
    } else if (j.contains("features_path")) {
      c.features_path = j["features_path"].get<std::string>();
      fs::path fpath = dir / c.features_path;
      if (!fs::exists(fpath))
        throw DataError("manifest: record " + c.id +
                        " references missing feature file " + fpath.string());
      c.features = load_feature_matrix(fpath.string());
    } else {
      throw DataError("manifest: record " + c.id + " has no features");
    }
    m.clips.push_back(std::move(c));
  }
  m.validate();
  return m;
}

}  // namespace dysflm
