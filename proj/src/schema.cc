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

#include "tdp/schema.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tdp/errors.h"

namespace tdp {

namespace {

constexpr std::string_view kReservedValueChars = ";(){}#=";

bool IsNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }

}  // namespace

std::string ToLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// SlotValue

SlotValue::SlotValue(std::string value)
    : SlotValue(std::vector<std::string>{std::move(value)}) {}

SlotValue::SlotValue(std::vector<std::string> values) {
  for (auto& v : values) {
    std::string t = Trim(v);
    if (t.empty()) throw ValidationError("slot value is empty");
    if (t.find_first_of(kReservedValueChars) != std::string::npos) {
      throw ValidationError("slot value '" + t +
                            "' contains a reserved character");
    }
    if (std::find(values_.begin(), values_.end(), t) == values_.end()) {
      values_.push_back(std::move(t));
    }
  }
  if (values_.empty()) throw ValidationError("slot value has no alternatives");
}

bool SlotValue::is_unknown() const {
  return values_.size() == 1 && values_[0] == kUnknownValue;
}

bool SlotValue::is_anything() const {
  return values_.size() == 1 && EqualsIgnoreCase(values_[0], kAnythingValue);
}

bool SlotValue::Matches(std::string_view candidate) const {
  return std::any_of(values_.begin(), values_.end(), [&](const std::string& v) {
    return EqualsIgnoreCase(v, candidate);
  });
}

nlohmann::json SlotValueToJson(const SlotValue& v) {
  if (v.is_multi()) return nlohmann::json(v.values());
  return nlohmann::json(v.front());
}

SlotValue SlotValueFromJson(const nlohmann::json& j) {
  if (j.is_string()) return SlotValue(j.get<std::string>());
  if (j.is_array()) {
    std::vector<std::string> values;
    for (const auto& e : j) {
      if (!e.is_string()) throw ValidationError("slot value must be a string");
      values.push_back(e.get<std::string>());
    }
    return SlotValue(std::move(values));
  }
  throw ValidationError("slot value must be a string or array of strings");
}

// DialogAct

DialogAct::DialogAct(std::string_view intent) : intent_(ToLower(Trim(intent))) {
  if (intent_.empty()) throw ValidationError("dialog act intent is empty");
}

DialogAct DialogAct::Make(
    std::string_view intent, std::initializer_list<std::string_view> requests,
    std::initializer_list<std::pair<std::string_view, SlotValue>> informs) {
  DialogAct act(intent);
  for (auto r : requests) act.AddRequest(r);
  for (const auto& [slot, value] : informs) act.AddInform(slot, value);
  return act;
}

DialogAct& DialogAct::AddInform(std::string_view slot, SlotValue value) {
  if (value.is_unknown()) return AddRequest(slot);
  std::string name = ToLower(Trim(slot));
  if (name.empty()) throw ValidationError("slot name is empty");
  if (request_slots_.count(name)) {
    throw ValidationError("slot '" + name + "' is already requested");
  }
  inform_slots_.insert_or_assign(std::move(name), std::move(value));
  return *this;
}

DialogAct& DialogAct::AddRequest(std::string_view slot) {
  std::string name = ToLower(Trim(slot));
  if (name.empty()) throw ValidationError("slot name is empty");
  if (inform_slots_.count(name)) {
    throw ValidationError("slot '" + name + "' is already informed");
  }
  request_slots_.insert(std::move(name));
  return *this;
}

DialogAct& DialogAct::Remove(std::string_view slot) {
  std::string name = ToLower(slot);
  inform_slots_.erase(name);
  request_slots_.erase(name);
  return *this;
}

bool DialogAct::HasInform(std::string_view slot) const {
  return inform_slots_.count(std::string(slot)) > 0;
}

bool DialogAct::HasRequest(std::string_view slot) const {
  return request_slots_.count(std::string(slot)) > 0;
}

bool DialogAct::IsTaskComplete() const {
  return intent_ == intents::kInform && HasSlot(kTaskCompleteSlot);
}

// DomainSchema

namespace {

std::vector<std::string> ReadNameList(const nlohmann::json& doc,
                                      const char* field) {
  if (!doc.contains(field)) throw SchemaError(field, "missing");
  const auto& arr = doc.at(field);
  if (!arr.is_array()) throw SchemaError(field, "must be an array");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : arr) {
    if (!item.is_string()) throw SchemaError(field, "entries must be strings");
    std::string name = ToLower(Trim(item.get<std::string>()));
    if (name.empty()) throw SchemaError(field, "empty name");
    if (!std::all_of(name.begin(), name.end(), IsNameChar)) {
      throw SchemaError(field, "invalid name '" + name + "'");
    }
    if (!seen.insert(name).second) {
      throw SchemaError(field, "duplicate name '" + name + "'");
    }
    out.push_back(std::move(name));
  }
  return out;
}

}  // namespace

DomainSchema DomainSchema::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("<root>", "must be an object");
  DomainSchema s;
  if (!doc.contains("domain") || !doc.at("domain").is_string()) {
    throw SchemaError("domain", "missing or not a string");
  }
  s.domain_name_ = ToLower(Trim(doc.at("domain").get<std::string>()));
  if (s.domain_name_.empty()) throw SchemaError("domain", "empty");

  s.intents_ = ReadNameList(doc, "intents");
  if (s.intents_.empty()) throw SchemaError("intents", "must be non-empty");
  s.informable_ = ReadNameList(doc, "informable_slots");
  s.requestable_ = ReadNameList(doc, "requestable_slots");

  if (!doc.contains("primary_request_slot") ||
      !doc.at("primary_request_slot").is_string()) {
    throw SchemaError("primary_request_slot", "missing or not a string");
  }
  s.primary_ = ToLower(Trim(doc.at("primary_request_slot").get<std::string>()));
  if (std::find(s.requestable_.begin(), s.requestable_.end(), s.primary_) ==
      s.requestable_.end()) {
    throw SchemaError("primary_request_slot",
                      "'" + s.primary_ + "' is not a requestable slot");
  }
  if (std::find(s.requestable_.begin(), s.requestable_.end(),
                kTaskCompleteSlot) == s.requestable_.end()) {
    throw SchemaError("requestable_slots",
                      "must contain '" + std::string(kTaskCompleteSlot) + "'");
  }

  if (!doc.contains("max_turns") || !doc.at("max_turns").is_number_integer() ||
      doc.at("max_turns").get<long long>() < 2) {
    throw SchemaError("max_turns", "must be an integer >= 2");
  }
  s.max_turns_ = doc.at("max_turns").get<int>();

  for (std::size_t i = 0; i < s.intents_.size(); ++i) {
    s.intent_index_.emplace(s.intents_[i], i);
  }
  auto add_slot = [&s](const std::string& name) {
    if (s.slot_index_.count(name)) return;
    s.slot_index_.emplace(name, s.all_slots_.size());
    s.all_slots_.push_back(name);
  };
  for (const auto& n : s.informable_) add_slot(n);
  for (const auto& n : s.requestable_) add_slot(n);
  for (const auto& n : s.all_slots_) {
    if (s.intent_index_.count(n)) {
      throw SchemaError("informable_slots",
                        "slot '" + n + "' collides with an intent name");
    }
  }
  return s;
}

DomainSchema DomainSchema::FromString(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("schema JSON: ") + e.what(), e.byte);
  }
  return FromJson(doc);
}

DomainSchema DomainSchema::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromString(buf.str());
}

bool DomainSchema::HasIntent(std::string_view intent) const {
  return intent_index_.count(std::string(intent)) > 0;
}

bool DomainSchema::HasSlot(std::string_view slot) const {
  return slot_index_.count(std::string(slot)) > 0;
}

bool DomainSchema::IsInformable(std::string_view slot) const {
  return std::find(informable_.begin(), informable_.end(), slot) !=
         informable_.end();
}

bool DomainSchema::IsRequestable(std::string_view slot) const {
  return std::find(requestable_.begin(), requestable_.end(), slot) !=
         requestable_.end();
}

std::optional<std::size_t> DomainSchema::SlotIndex(std::string_view slot) const {
  auto it = slot_index_.find(std::string(slot));
  if (it == slot_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DomainSchema::IntentIndex(
    std::string_view intent) const {
  auto it = intent_index_.find(std::string(intent));
  if (it == intent_index_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json DomainSchema::ToJson() const {
  nlohmann::ordered_json j;
  j["domain"] = domain_name_;
  j["intents"] = intents_;
  j["informable_slots"] = informable_;
  j["requestable_slots"] = requestable_;
  j["primary_request_slot"] = primary_;
  j["max_turns"] = max_turns_;
  return nlohmann::json::parse(j.dump());
}

std::uint64_t DomainSchema::Hash() const {
  nlohmann::ordered_json j;
  j["domain"] = domain_name_;
  j["intents"] = intents_;
  j["informable_slots"] = informable_;
  j["requestable_slots"] = requestable_;
  j["primary_request_slot"] = primary_;
  j["max_turns"] = max_turns_;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Frame parser

namespace {

class FrameParser {
 public:
  explicit FrameParser(std::string_view text) : text_(text) {}

  DialogAct Parse() {
    SkipSpace();
    std::size_t intent_at = pos_;
    std::string intent = ReadName();
    if (intent.empty()) Fail("expected intent name", intent_at);
    SkipSpace();
    Expect('(');
    DialogAct act(intent);
    SkipSpace();
    if (Peek() == ')') {
      ++pos_;
    } else {
      for (;;) {
        ParseParam(act);
        SkipSpace();
        char c = Peek();
        if (c == ';') {
          ++pos_;
          continue;
        }
        if (c == ')') {
          ++pos_;
          break;
        }
        Fail(AtEnd() ? "unterminated frame, expected ')'"
                     : "expected ';' or ')'",
             pos_);
      }
    }
    SkipSpace();
    if (!AtEnd()) Fail("trailing characters after ')'", pos_);
    return act;
  }

 private:
  void ParseParam(DialogAct& act) {
    SkipSpace();
    std::size_t slot_at = pos_;
    std::string slot = ReadName();
    if (slot.empty()) Fail("expected slot name", slot_at);
    slot = ToLower(slot);
    SkipSpace();
    if (act.HasSlot(slot)) Fail("duplicate slot '" + slot + "'", slot_at);
    if (Peek() != '=') {
      act.AddRequest(slot);
      return;
    }
    ++pos_;
    SkipSpace();
    std::vector<std::string> values;
    if (Peek() == '{') {
      ++pos_;
      for (;;) {
        values.push_back(ReadAtom("#}"));
        char c = Peek();
        if (c == '#') {
          ++pos_;
          continue;
        }
        if (c == '}') {
          ++pos_;
          break;
        }
        Fail("expected '#' or '}' in value set", pos_);
      }
    } else {
      values.push_back(ReadAtom(";)"));
    }
    act.AddInform(slot, SlotValue(std::move(values)));
  }

  // Reads up to (not including) one of `stops`; rejects other reserved
  // characters and empty atoms.
  std::string ReadAtom(std::string_view stops) {
    std::size_t start = pos_;
    while (!AtEnd() && stops.find(text_[pos_]) == std::string_view::npos) {
      if (kReservedValueChars.find(text_[pos_]) != std::string_view::npos) {
        Fail(std::string("unexpected '") + text_[pos_] + "' in value", pos_);
      }
      ++pos_;
    }
    if (AtEnd()) Fail("unterminated value", pos_);
    std::string atom = Trim(text_.substr(start, pos_ - start));
    if (atom.empty()) Fail("empty value", start);
    return atom;
  }

  std::string ReadName() {
    std::size_t start = pos_;
    while (!AtEnd() && IsNameChar(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void Expect(char c) {
    if (Peek() != c) Fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  void SkipSpace() {
    while (!AtEnd() && IsSpace(text_[pos_])) ++pos_;
  }

  char Peek() const { return AtEnd() ? '\0' : text_[pos_]; }
  bool AtEnd() const { return pos_ >= text_.size(); }

  [[noreturn]] void Fail(const std::string& what, std::size_t at) const {
    throw ParseError("frame: " + what, at);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string> OrderedSlots(std::vector<std::string> slots,
                                      const DomainSchema* schema) {
  auto key = [schema](const std::string& s) {
    std::size_t idx = static_cast<std::size_t>(-1);
    if (schema != nullptr) {
      if (auto i = schema->SlotIndex(s)) idx = *i;
    }
    return std::make_pair(idx, s);
  };
  std::sort(slots.begin(), slots.end(),
            [&](const std::string& a, const std::string& b) {
              return key(a) < key(b);
            });
  return slots;
}

std::string Serialize(const DialogAct& act, const DomainSchema* schema) {
  std::vector<std::string> requests(act.request_slots().begin(),
                                    act.request_slots().end());
  std::vector<std::string> informs;
  for (const auto& [slot, value] : act.inform_slots()) informs.push_back(slot);

  std::string out = act.intent();
  out += '(';
  bool first = true;
  for (const auto& slot : OrderedSlots(std::move(requests), schema)) {
    if (!first) out += ';';
    first = false;
    out += slot;
  }
  for (const auto& slot : OrderedSlots(std::move(informs), schema)) {
    if (!first) out += ';';
    first = false;
    out += slot;
    out += '=';
    const SlotValue& v = act.inform_slots().at(slot);
    if (v.is_multi()) {
      out += '{';
      for (std::size_t i = 0; i < v.values().size(); ++i) {
        if (i) out += '#';
        out += v.values()[i];
      }
      out += '}';
    } else {
      out += v.front();
    }
  }
  out += ')';
  return out;
}

}  // namespace

DialogAct ParseFrame(std::string_view text) { return FrameParser(text).Parse(); }

DialogAct ParseFrame(std::string_view text, const DomainSchema& schema,
                     ParseMode mode) {
  DialogAct act = ParseFrame(text);
  if (mode == ParseMode::kStrict) {
    auto violations = ValidateAct(act, schema);
    if (!violations.empty()) {
      std::string msg = "frame '" + std::string(text) + "' is not valid for " +
                        schema.domain_name() + ":";
      for (const auto& v : violations) msg += " " + v.ToString();
      throw ValidationError(msg);
    }
  }
  return act;
}

std::string SerializeFrame(const DialogAct& act) {
  return Serialize(act, nullptr);
}

std::string SerializeFrame(const DialogAct& act, const DomainSchema& schema) {
  return Serialize(act, &schema);
}

std::string Violation::ToString() const {
  switch (kind) {
    case Kind::kUnknownIntent:
      return "UnknownIntent(\"" + name + "\")";
    case Kind::kUnknownSlot:
      return "UnknownSlot(\"" + name + "\")";
    case Kind::kNotRequestable:
      return "NotRequestable(\"" + name + "\")";
  }
  return "?";
}

std::vector<Violation> ValidateAct(const DialogAct& act,
                                   const DomainSchema& schema) {
  std::vector<Violation> out;
  if (!schema.HasIntent(act.intent())) {
    out.push_back({Violation::Kind::kUnknownIntent, act.intent()});
  }
  for (const auto& slot : act.request_slots()) {
    if (!schema.HasSlot(slot)) {
      out.push_back({Violation::Kind::kUnknownSlot, slot});
    } else if (!schema.IsRequestable(slot)) {
      out.push_back({Violation::Kind::kNotRequestable, slot});
    }
  }
  for (const auto& [slot, value] : act.inform_slots()) {
    if (!schema.HasSlot(slot)) {
      out.push_back({Violation::Kind::kUnknownSlot, slot});
    }
  }
  return out;
}

}  // namespace tdp
