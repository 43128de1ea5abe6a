// Copyright 2026 The TDP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Domain schemas and the dialog-act frame language.
//
// A dialog act is written as
//
//   intent '(' [param (';' param)*] ')'
//   param := slot ['=' value]
//   value := atom | '{' atom ('#' atom)* '}'
//
// e.g. "request(moviename;genre=action;date=this weekend)". Bare params are
// request slots, `slot=value` params are inform slots, and a value of "UNK"
// is the same as a bare param.

#ifndef TDP_SCHEMA_H_
#define TDP_SCHEMA_H_

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace tdp {

inline constexpr std::string_view kUnknownValue = "UNK";
inline constexpr std::string_view kAnythingValue = "anything";
// Protocol slot every schema must list as requestable: an agent books with
// inform(taskcomplete; ...) and reports a failed booking with
// inform(taskcomplete=none).
inline constexpr std::string_view kTaskCompleteSlot = "taskcomplete";
inline constexpr std::string_view kNoBookingValue = "none";

namespace intents {
inline constexpr std::string_view kInform = "inform";
inline constexpr std::string_view kRequest = "request";
inline constexpr std::string_view kConfirmQuestion = "confirm_question";
inline constexpr std::string_view kConfirmAnswer = "confirm_answer";
inline constexpr std::string_view kGreeting = "greeting";
inline constexpr std::string_view kClosing = "closing";
inline constexpr std::string_view kMultipleChoice = "multiple_choice";
inline constexpr std::string_view kThanks = "thanks";
inline constexpr std::string_view kWelcome = "welcome";
inline constexpr std::string_view kDeny = "deny";
inline constexpr std::string_view kNotSure = "not_sure";
}  // namespace intents

std::string ToLower(std::string_view s);
std::string Trim(std::string_view s);
bool EqualsIgnoreCase(std::string_view a, std::string_view b);

// One or more alternative values for a slot. Multi-valued only when written
// as `{a#b}`; alternatives keep their first-seen order and are deduplicated.
class SlotValue {
 public:
  SlotValue(std::string value);  // NOLINT: implicit from a single value.
  SlotValue(const char* value) : SlotValue(std::string(value)) {}  // NOLINT
  explicit SlotValue(std::vector<std::string> values);

  const std::vector<std::string>& values() const { return values_; }
  const std::string& front() const { return values_.front(); }
  bool is_multi() const { return values_.size() > 1; }
  bool is_unknown() const;
  bool is_anything() const;

  // Case-insensitive membership test over the alternatives.
  bool Matches(std::string_view candidate) const;

  friend bool operator==(const SlotValue& a, const SlotValue& b) {
    return a.values_ == b.values_;
  }
  friend bool operator!=(const SlotValue& a, const SlotValue& b) {
    return !(a == b);
  }

 private:
  std::vector<std::string> values_;
};

using SlotMap = std::map<std::string, SlotValue>;

// A single value is a JSON string; alternatives are an array of strings.
nlohmann::json SlotValueToJson(const SlotValue& v);
SlotValue SlotValueFromJson(const nlohmann::json& j);

// An intent plus inform slots and request slots. Slot and intent names are
// lower-cased; the inform and request sets never overlap.
class DialogAct {
 public:
  DialogAct() = default;
  explicit DialogAct(std::string_view intent);

  static DialogAct Make(std::string_view intent,
                        std::initializer_list<std::string_view> requests,
                        std::initializer_list<std::pair<std::string_view,
                                                        SlotValue>> informs);

  const std::string& intent() const { return intent_; }
  const SlotMap& inform_slots() const { return inform_slots_; }
  const std::set<std::string>& request_slots() const { return request_slots_; }

  // An "UNK" value becomes a request slot. Throws ValidationError when the
  // slot is already on the other side.
  DialogAct& AddInform(std::string_view slot, SlotValue value);
  DialogAct& AddRequest(std::string_view slot);
  DialogAct& Remove(std::string_view slot);

  bool HasInform(std::string_view slot) const;
  bool HasRequest(std::string_view slot) const;
  bool HasSlot(std::string_view slot) const {
    return HasInform(slot) || HasRequest(slot);
  }
  bool empty() const { return inform_slots_.empty() && request_slots_.empty(); }
  bool is(std::string_view intent) const { return intent_ == intent; }

  // inform(taskcomplete ...) of any form.
  bool IsTaskComplete() const;

  friend bool operator==(const DialogAct& a, const DialogAct& b) {
    return a.intent_ == b.intent_ && a.inform_slots_ == b.inform_slots_ &&
           a.request_slots_ == b.request_slots_;
  }
  friend bool operator!=(const DialogAct& a, const DialogAct& b) {
    return !(a == b);
  }

 private:
  std::string intent_;
  SlotMap inform_slots_;
  std::set<std::string> request_slots_;
};

class DomainSchema {
 public:
  static DomainSchema FromJson(const nlohmann::json& doc);
  static DomainSchema FromString(std::string_view text);
  static DomainSchema FromFile(const std::string& path);

  const std::string& domain_name() const { return domain_name_; }
  const std::vector<std::string>& intents() const { return intents_; }
  const std::vector<std::string>& informable_slots() const {
    return informable_;
  }
  const std::vector<std::string>& requestable_slots() const {
    return requestable_;
  }
  const std::string& primary_request_slot() const { return primary_; }
  int max_turns() const { return max_turns_; }

  // Informable slots in file order followed by requestable-only slots.
  const std::vector<std::string>& all_slots() const { return all_slots_; }

  bool HasIntent(std::string_view intent) const;
  bool HasSlot(std::string_view slot) const;
  bool IsInformable(std::string_view slot) const;
  bool IsRequestable(std::string_view slot) const;

  // Position in all_slots(), or nullopt for slots outside the schema.
  std::optional<std::size_t> SlotIndex(std::string_view slot) const;
  std::optional<std::size_t> IntentIndex(std::string_view intent) const;

  nlohmann::json ToJson() const;
  // FNV-1a over the canonical JSON form; stored in checkpoints.
  std::uint64_t Hash() const;

 private:
  std::string domain_name_;
  std::vector<std::string> intents_;
  std::vector<std::string> informable_;
  std::vector<std::string> requestable_;
  std::string primary_;
  int max_turns_ = 0;
  std::vector<std::string> all_slots_;
  std::unordered_map<std::string, std::size_t> slot_index_;
  std::unordered_map<std::string, std::size_t> intent_index_;
};

enum class ParseMode {
  kStrict,   // unknown intents/slots raise ValidationError
  kLenient,  // schema is used only for name checks that are reported later
};

// Syntax-only parse.
DialogAct ParseFrame(std::string_view text);
DialogAct ParseFrame(std::string_view text, const DomainSchema& schema,
                     ParseMode mode = ParseMode::kStrict);

// Canonical form: request slots then inform slots, each group in schema
// order (lexicographic for the schema-less overload and for slots the schema
// does not know), no whitespace added.
std::string SerializeFrame(const DialogAct& act);
std::string SerializeFrame(const DialogAct& act, const DomainSchema& schema);

struct Violation {
  enum class Kind { kUnknownIntent, kUnknownSlot, kNotRequestable };
  Kind kind;
  std::string name;

  std::string ToString() const;
  friend bool operator==(const Violation& a, const Violation& b) {
    return a.kind == b.kind && a.name == b.name;
  }
};

std::vector<Violation> ValidateAct(const DialogAct& act,
                                   const DomainSchema& schema);

}  // namespace tdp

#endif  // TDP_SCHEMA_H_
