#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dysflm {

// Six dysfluency classes in canonical order. Mod (modified speech) is
// only annotated in the ksof schema.
enum class DysfluencyClass : std::uint8_t { Blk = 0, Int, Pro, Snd, Wrd, Mod };

inline constexpr std::array<DysfluencyClass, 6> kAllClasses = {
    DysfluencyClass::Blk, DysfluencyClass::Int, DysfluencyClass::Pro,
    DysfluencyClass::Snd, DysfluencyClass::Wrd, DysfluencyClass::Mod};

enum class Schema : std::uint8_t { Sep28k, FluencyBank, Ksof };

std::string_view class_tag(DysfluencyClass c);
std::string_view schema_name(Schema s);
Schema parse_schema(std::string_view name);  // throws ConfigError

// Classes available under a schema, in canonical order.
std::vector<DysfluencyClass> schema_classes(Schema s);
bool class_in_schema(DysfluencyClass c, Schema s);

// Multi-hot set over the six classes. Empty set = fluent clip.
class LabelSet {
 public:
  LabelSet() = default;

  void add(DysfluencyClass c) { bits_ |= bit(c); }
  void remove(DysfluencyClass c) { bits_ &= ~bit(c); }
  bool contains(DysfluencyClass c) const { return bits_ & bit(c); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;

  // Members in canonical order.
  std::vector<DysfluencyClass> members() const;

  bool valid_under(Schema s) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  static std::uint8_t bit(DysfluencyClass c) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
  }
  std::uint8_t bits_ = 0;
};

LabelSet make_label_set(std::initializer_list<DysfluencyClass> cs);

// "Blk;Int" / "None". Throws ConfigError when a member is outside the
// active schema.
std::string serialize_labels(const LabelSet& labels, Schema schema);

// Total function over arbitrary generated text: splits on ';', trims
// whitespace, keeps exact tag matches of the active schema and silently
// drops everything else. Never throws.
LabelSet parse_labels(std::string_view text, Schema schema);

}  // namespace dysflm
