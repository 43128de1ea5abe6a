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

#include "tdp/knowledge_base.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tdp/errors.h"

namespace tdp {

namespace {

bool IsVacuous(const SlotValue& v) { return v.is_anything() || v.is_unknown(); }

}  // namespace

const std::string* KbRecord::Get(std::string_view slot) const {
  auto it = slots.find(std::string(slot));
  return it == slots.end() ? nullptr : &it->second;
}

bool Satisfies(const KbRecord& record, const SlotMap& constraints,
               MissingSlotPolicy policy) {
  for (const auto& [slot, value] : constraints) {
    if (IsVacuous(value)) continue;
    const std::string* have = record.Get(slot);
    if (have == nullptr) {
      if (policy == MissingSlotPolicy::kReject) return false;
      continue;
    }
    if (!value.Matches(*have)) return false;
  }
  return true;
}

KnowledgeBase KnowledgeBase::FromJson(const nlohmann::json& doc,
                                      const DomainSchema& schema) {
  if (!doc.is_array()) throw KbFormatError(0, "root must be a JSON array");
  KnowledgeBase kb;
  kb.domain_ = schema.domain_name();
  std::set<std::string> unknown;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& row = doc[i];
    if (!row.is_object()) throw KbFormatError(i, "record must be an object");
    KbRecord rec;
    rec.id = static_cast<int>(i) + 1;
    for (const auto& [key, value] : row.items()) {
      if (!value.is_string()) {
        throw KbFormatError(i, "value of '" + key + "' is not a string");
      }
      std::string slot = ToLower(Trim(key));
      std::string v = Trim(value.get<std::string>());
      if (v.empty()) throw KbFormatError(i, "value of '" + key + "' is empty");
      if (!schema.HasSlot(slot)) unknown.insert(slot);
      rec.slots[slot] = std::move(v);
    }
    kb.records_.push_back(std::move(rec));
  }
  kb.warnings_.assign(unknown.begin(), unknown.end());
  kb.BuildIndex();
  return kb;
}

KnowledgeBase KnowledgeBase::FromString(std::string_view text,
                                        const DomainSchema& schema) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("kb JSON: ") + e.what(), e.byte);
  }
  return FromJson(doc, schema);
}

KnowledgeBase KnowledgeBase::FromFile(const std::string& path,
                                      const DomainSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kb file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromString(buf.str(), schema);
}

KnowledgeBase KnowledgeBase::FromRecords(
    std::string domain, std::vector<std::map<std::string, std::string>> rows) {
  KnowledgeBase kb;
  kb.domain_ = std::move(domain);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    KbRecord rec;
    rec.id = static_cast<int>(i) + 1;
    for (auto& [k, v] : rows[i]) rec.slots[ToLower(k)] = std::move(v);
    kb.records_.push_back(std::move(rec));
  }
  kb.BuildIndex();
  return kb;
}

void KnowledgeBase::BuildIndex() {
  index_.clear();
  missing_.clear();
  for (const auto& rec : records_) {
    for (const auto& [slot, value] : rec.slots) {
      index_[slot][ToLower(value)].push_back(rec.id);
    }
  }
  for (const auto& [slot, by_value] : index_) {
    auto& lacking = missing_[slot];
    for (const auto& rec : records_) {
      if (!rec.Has(slot)) lacking.push_back(rec.id);
    }
  }
}

const std::vector<int>* KnowledgeBase::Lookup(std::string_view slot,
                                              std::string_view value) const {
  auto s = index_.find(std::string(slot));
  if (s == index_.end()) return nullptr;
  auto v = s->second.find(ToLower(value));
  if (v == s->second.end()) return nullptr;
  return &v->second;
}

std::vector<const KbRecord*> KnowledgeBase::Query(
    const SlotMap& constraints) const {
  // Per-record hit counters: a record survives if every effective
  // constraint marks it.
  std::vector<int> hits(records_.size() + 1, 0);
  int needed = 0;
  for (const auto& [slot, value] : constraints) {
    if (IsVacuous(value)) continue;
    auto slot_it = index_.find(slot);
    if (slot_it == index_.end()) {
      // No record carries the slot.
      if (policy_ == MissingSlotPolicy::kReject) return {};
      continue;
    }
    ++needed;
    std::vector<int> marked;
    for (const auto& alt : value.values()) {
      auto v = slot_it->second.find(ToLower(alt));
      if (v != slot_it->second.end()) {
        marked.insert(marked.end(), v->second.begin(), v->second.end());
      }
    }
    if (policy_ == MissingSlotPolicy::kMatch) {
      const auto& lacking = missing_.at(slot);
      marked.insert(marked.end(), lacking.begin(), lacking.end());
    }
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    for (int id : marked) ++hits[id];
  }
  std::vector<const KbRecord*> out;
  for (const auto& rec : records_) {
    if (hits[rec.id] == needed) out.push_back(&rec);
  }
  return out;
}

std::size_t KnowledgeBase::Count(const SlotMap& constraints) const {
  return Query(constraints).size();
}

std::map<std::string, int> KnowledgeBase::AvailableValues(
    std::string_view slot, const SlotMap& constraints) const {
  std::map<std::string, int> hist;
  for (const KbRecord* rec : Query(constraints)) {
    if (const std::string* v = rec->Get(slot)) ++hist[*v];
  }
  return hist;
}

std::optional<std::string> KnowledgeBase::TopValue(
    std::string_view slot, const SlotMap& constraints) const {
  auto hist = AvailableValues(slot, constraints);
  std::optional<std::string> best;
  int best_count = 0;
  // std::map iterates lexicographically, so the first maximum wins ties.
  for (const auto& [value, count] : hist) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

std::map<std::string, std::vector<std::string>> KnowledgeBase::Vocabulary()
    const {
  std::map<std::string, std::vector<std::string>> vocab;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& rec : records_) {
    for (const auto& [slot, value] : rec.slots) {
      if (seen[slot].insert(value).second) vocab[slot].push_back(value);
    }
  }
  return vocab;
}

}  // namespace tdp
