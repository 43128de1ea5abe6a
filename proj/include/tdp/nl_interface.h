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

// Template NLG and rule NLU.
//
// A template file maps "intent|item,item,..." keys to sentences. An item is
//   slot          a request slot, or an inform slot when the sentence holds
//                 a <slot> placeholder for its value
//   slot=value    an inform slot with that literal value
//   *=anything    inform(s=anything) for whichever slot s the other party
//                 just asked about
// A key may map to a list of sentences: the first is rendered, the others
// are only recognized.
//
// Rendering checks its own output: the sentence is kept only when parsing it
// back (with the same context) gives the original act, otherwise the
// fallback form "I <intent>: <params>" is used, whose params are the frame
// params separated by "; ". Parse(Render(a, c), c) == a therefore holds for
// every act.

#ifndef TDP_NL_INTERFACE_H_
#define TDP_NL_INTERFACE_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tdp/schema.h"

namespace tdp {

class TemplateTable {
 public:
  struct Entry {
    std::string key;
    std::string text;
    std::string intent;
    std::set<std::string> requests;
    std::set<std::string> placeholders;
    SlotMap fixed;  // literal-valued informs
    bool wildcard_anything = false;
    bool parse_only = false;  // a listed alternate after the first sentence
    // Alternating literal / placeholder pieces; placeholders are the slot
    // names, marked by is_slot.
    struct Piece {
      bool is_slot;
      std::string text;
    };
    std::vector<Piece> pieces;
    std::size_t literal_length = 0;
  };

  TemplateTable() = default;
  // Throws ValidationError on malformed keys or placeholders outside the
  // key's signature.
  static TemplateTable FromJson(const nlohmann::json& doc,
                                const DomainSchema& schema);
  static TemplateTable FromFile(const std::string& path,
                                const DomainSchema& schema);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  // Exact-signature entry for the act, or the wildcard entry for a single
  // inform(s=anything); nullptr if neither exists.
  const Entry* Find(const DialogAct& act) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> by_key_;
};

// Keyword lexicon for free-typed input.
struct Lexicon {
  std::map<std::string, std::vector<std::string>> slot_keywords;
  std::map<std::string, std::vector<std::string>> count_patterns;
  std::vector<std::string> anything_phrases;
  std::vector<std::pair<std::string, std::vector<std::string>>> intent_keywords;

  // Object order is significant: intents are tried in file order.
  static Lexicon FromJson(const nlohmann::ordered_json& doc);
  static Lexicon FromFile(const std::string& path);
};

class NlInterface {
 public:
  enum class Source { kFallback, kTemplate, kLexicon, kNotSure };

  // `vocabulary` is the per-slot KB value list used to rank template
  // matches and to spot values in free text.
  NlInterface(const DomainSchema& schema, TemplateTable table, Lexicon lexicon,
              std::map<std::string, std::vector<std::string>> vocabulary);

  // `context` is the other party's previous act, if any.
  std::string Render(const DialogAct& act, const DialogAct* context = nullptr) const;
  DialogAct Parse(std::string_view utterance, const DialogAct* context = nullptr,
                  Source* source = nullptr) const;

  // True when Render() would use the template sentence rather than the
  // fallback.
  bool RendersWithTemplate(const DialogAct& act, const DialogAct* context = nullptr) const;

  const TemplateTable& table() const { return table_; }

 private:
  std::optional<DialogAct> ParseFallback(std::string_view text) const;
  std::optional<DialogAct> ParseTemplates(std::string_view text,
                                          const DialogAct* context) const;
  std::optional<DialogAct> ParseLexicon(std::string_view text,
                                        const DialogAct* context) const;
  std::optional<std::string> RenderTemplate(const DialogAct& act,
                                            const DialogAct* context) const;
  bool InVocabulary(const std::string& slot, std::string_view value) const;

  const DomainSchema* schema_;
  TemplateTable table_;
  Lexicon lexicon_;
  std::map<std::string, std::vector<std::string>> vocab_;
  std::map<std::string, std::set<std::string>> folded_vocab_;
};

std::string RenderFallback(const DialogAct& act, const DomainSchema& schema);

}  // namespace tdp

#endif  // TDP_NL_INTERFACE_H_
