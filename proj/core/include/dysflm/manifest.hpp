#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dysflm/channel.hpp"
#include "dysflm/labels.hpp"

namespace dysflm {

enum class DecoderMode { OneBest, NBest, Phon, Mbr };

std::string_view decoder_mode_name(DecoderMode m);  // "1-best" etc.
DecoderMode parse_decoder_mode(std::string_view name);

enum class Split { Train, Dev, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

// One 3-second-clip record: acoustic features, truth transcript,
// per-decoder hypothesis candidates, gold labels.
struct ClipExample {
  std::string id;
  Split split = Split::Train;
  std::vector<std::string> transcript;
  std::optional<std::vector<std::string>> hyp_1best;
  std::optional<std::vector<TextHypothesis>> hyp_nbest;
  std::optional<std::vector<std::string>> hyp_phon;
  std::optional<std::vector<std::string>> hyp_mbr;
  LabelSet labels;
  Eigen::MatrixXf features;    // L x a
  std::string features_path;   // set when features live in a sidecar file

  bool has_mode(DecoderMode m) const;
};

struct Manifest {
  Schema schema = Schema::Sep28k;
  std::vector<ClipExample> clips;

  std::vector<const ClipExample*> split_clips(Split s) const;
  void validate() const;  // unique ids, labels within schema
};

// One JSON record per line; features inline (rows) or as a relative
// path to a raw float32 matrix file with a shape header.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path,
                   bool inline_features = false);

Eigen::MatrixXf load_feature_matrix(const std::string& path);
void save_feature_matrix(const Eigen::MatrixXf& m, const std::string& path);

// write-temp-then-rename
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace dysflm
