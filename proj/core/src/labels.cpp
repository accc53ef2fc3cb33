#include "dysflm/labels.hpp"

#include <algorithm>
#include <bit>

#include "dysflm/errors.hpp"

namespace dysflm {

std::string_view class_tag(DysfluencyClass c) {
  switch (c) {
    case DysfluencyClass::Blk: return "Blk";
    case DysfluencyClass::Int: return "Int";
    case DysfluencyClass::Pro: return "Pro";
    case DysfluencyClass::Snd: return "Snd";
    case DysfluencyClass::Wrd: return "Wrd";
    case DysfluencyClass::Mod: return "Mod";
  }
  return "?";
}

std::string_view schema_name(Schema s) {
  switch (s) {
    case Schema::Sep28k: return "sep28k";
    case Schema::FluencyBank: return "fluencybank";
    case Schema::Ksof: return "ksof";
  }
  return "?";
}

Schema parse_schema(std::string_view name) {
  if (name == "sep28k") return Schema::Sep28k;
  if (name == "fluencybank") return Schema::FluencyBank;
  if (name == "ksof") return Schema::Ksof;
  throw ConfigError("unknown schema: " + std::string(name));
}

bool class_in_schema(DysfluencyClass c, Schema s) {
  if (c == DysfluencyClass::Mod) return s == Schema::Ksof;
  return true;
}

std::vector<DysfluencyClass> schema_classes(Schema s) {
  std::vector<DysfluencyClass> out;
  for (auto c : kAllClasses)
    if (class_in_schema(c, s)) out.push_back(c);
  return out;
}

std::size_t LabelSet::size() const {
  return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<DysfluencyClass> LabelSet::members() const {
  std::vector<DysfluencyClass> out;
  for (auto c : kAllClasses)
    if (contains(c)) out.push_back(c);
  return out;
}

bool LabelSet::valid_under(Schema s) const {
  for (auto c : members())
    if (!class_in_schema(c, s)) return false;
  return true;
}

LabelSet make_label_set(std::initializer_list<DysfluencyClass> cs) {
  LabelSet s;
  for (auto c : cs) s.add(c);
  return s;
}

std::string serialize_labels(const LabelSet& labels, Schema schema) {
  if (labels.empty()) return "None";
  std::string out;
  for (auto c : labels.members()) {
    if (!class_in_schema(c, schema))
      throw ConfigError("label " + std::string(class_tag(c)) +
                        " not valid under schema " +
                        std::string(schema_name(schema)));
    if (!out.empty()) out += ';';
    out += class_tag(c);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

LabelSet parse_labels(std::string_view text, Schema schema) {
  LabelSet out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t sep = text.find(';', pos);
    std::string_view tok =
        trim(text.substr(pos, sep == std::string_view::npos ? sep : sep - pos));
    for (auto c : kAllClasses) {
      if (tok == class_tag(c) && class_in_schema(c, schema)) out.add(c);
    }
    if (sep == std::string_view::npos) break;
    pos = sep + 1;
  }
  return out;
}

}  // namespace dysflm
