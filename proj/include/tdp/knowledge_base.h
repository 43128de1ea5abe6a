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

#ifndef TDP_KNOWLEDGE_BASE_H_
#define TDP_KNOWLEDGE_BASE_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tdp/schema.h"

namespace tdp {

struct KbRecord {
  int id = 0;  // 1-based position in the source file
  std::map<std::string, std::string> slots;

  bool Has(std::string_view slot) const {
    return slots.count(std::string(slot)) > 0;
  }
  const std::string* Get(std::string_view slot) const;
};

// How a constraint on a slot the record does not carry is treated.
enum class MissingSlotPolicy { kMatch, kReject };

// Constraint predicate shared by the indexed query and the success check.
// "anything" and "UNK" constraints are vacuous; multi-valued constraints are
// disjunctive; comparison is case-insensitive.
bool Satisfies(const KbRecord& record, const SlotMap& constraints,
               MissingSlotPolicy policy = MissingSlotPolicy::kMatch);

class KnowledgeBase {
 public:
  static KnowledgeBase FromJson(const nlohmann::json& doc,
                                const DomainSchema& schema);
  static KnowledgeBase FromString(std::string_view text,
                                  const DomainSchema& schema);
  static KnowledgeBase FromFile(const std::string& path,
                                const DomainSchema& schema);
  static KnowledgeBase FromRecords(
      std::string domain, std::vector<std::map<std::string, std::string>> rows);

  const std::string& domain() const { return domain_; }
  const std::vector<KbRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  // Slot names seen in the file but absent from the schema.
  const std::vector<std::string>& warnings() const { return warnings_; }

  MissingSlotPolicy missing_slot_policy() const { return policy_; }
  void set_missing_slot_policy(MissingSlotPolicy p) { policy_ = p; }

  // Records satisfying every constraint, in file order. Uses the inverted
  // index.
  std::vector<const KbRecord*> Query(const SlotMap& constraints) const;
  std::size_t Count(const SlotMap& constraints) const;

  // Histogram of `slot` values over Query(constraints); records without the
  // slot are skipped.
  std::map<std::string, int> AvailableValues(std::string_view slot,
                                             const SlotMap& constraints) const;
  // Modal value of AvailableValues, ties broken lexicographically.
  std::optional<std::string> TopValue(std::string_view slot,
                                      const SlotMap& constraints) const;

  // Every distinct value per slot across the KB, in first-seen order.
  std::map<std::string, std::vector<std::string>> Vocabulary() const;

  // ids of records holding `value` (case-folded) for `slot`.
  const std::vector<int>* Lookup(std::string_view slot,
                                 std::string_view value) const;

 private:
  void BuildIndex();

  std::string domain_;
  std::vector<KbRecord> records_;
  std::vector<std::string> warnings_;
  MissingSlotPolicy policy_ = MissingSlotPolicy::kMatch;
  // slot -> folded value -> ids (ascending).
  std::unordered_map<std::string, std::unordered_map<std::string, std::vector<int>>>
      index_;
  // slot -> ids of records lacking the slot, for slots present somewhere.
  std::unordered_map<std::string, std::vector<int>> missing_;
};

}  // namespace tdp

#endif  // TDP_KNOWLEDGE_BASE_H_
