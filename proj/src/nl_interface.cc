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

#include "tdp/nl_interface.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <tuple>

#include "io_util.h"
#include "tdp/errors.h"

namespace tdp {

namespace {

bool IsWordChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string CollapseSpaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

// Occurrences of `needle` in `hay` (both already lower-cased) at positions
// >= from.
std::vector<std::size_t> FindAll(const std::string& hay, const std::string& needle,
                                 std::size_t from) {
  std::vector<std::size_t> out;
  if (needle.empty()) return out;
  for (std::size_t p = hay.find(needle, from); p != std::string::npos;
       p = hay.find(needle, p + 1)) {
    out.push_back(p);
  }
  return out;
}

bool ContainsWord(const std::string& hay, const std::string& phrase,
                  std::size_t* at = nullptr) {
  for (std::size_t p : FindAll(hay, phrase, 0)) {
    const bool left = p == 0 || !IsWordChar(hay[p - 1]);
    const std::size_t e = p + phrase.size();
    const bool right = e == hay.size() || !IsWordChar(hay[e]);
    if (left && right) {
      if (at) *at = p;
      return true;
    }
  }
  return false;
}

std::string SignatureOf(std::string_view intent, std::vector<std::string> slots) {
  std::sort(slots.begin(), slots.end());
  std::string sig(intent);
  sig += '|';
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i) sig += ',';
    sig += slots[i];
  }
  return sig;
}

std::string ActSignature(const DialogAct& act) {
  std::vector<std::string> slots(act.request_slots().begin(), act.request_slots().end());
  for (const auto& [s, v] : act.inform_slots()) slots.push_back(s);
  return SignatureOf(act.intent(), std::move(slots));
}

}  // namespace

// TemplateTable

TemplateTable TemplateTable::FromJson(const nlohmann::json& doc,
                                      const DomainSchema& schema) {
  if (!doc.is_object()) throw ValidationError("template file must be a JSON object");
  TemplateTable table;
  for (const auto& [key, value] : doc.items()) {
    std::vector<std::string> texts;
    if (value.is_string()) {
      texts.push_back(value.get<std::string>());
    } else if (value.is_array() && !value.empty()) {
      for (const auto& t : value) {
        if (!t.is_string()) {
          throw ValidationError("template '" + key + "' must hold strings");
        }
        texts.push_back(t.get<std::string>());
      }
    } else {
      throw ValidationError("template '" + key + "' must be a string or a list of strings");
    }
    for (std::size_t variant = 0; variant < texts.size(); ++variant) {
      Entry e;
      e.key = key;
      e.text = texts[variant];
      e.parse_only = variant > 0;
      const auto bar = key.find('|');
      if (bar == std::string::npos) {
        throw ValidationError("template key '" + key + "' lacks '|'");
      }
      e.intent = ToLower(Trim(std::string_view(key).substr(0, bar)));
      if (!schema.HasIntent(e.intent)) {
        throw ValidationError("template key '" + key + "' has unknown intent");
      }

      // Pieces and placeholders.
      std::string literal;
      for (std::size_t i = 0; i < e.text.size();) {
        if (e.text[i] == '<') {
          const auto close = e.text.find('>', i);
          if (close == std::string::npos) {
            throw ValidationError("template '" + key + "' has an unclosed placeholder");
          }
          const std::string slot = e.text.substr(i + 1, close - i - 1);
          if (!literal.empty()) {
            e.literal_length += literal.size();
            e.pieces.push_back({false, std::move(literal)});
            literal.clear();
          } else if (!e.pieces.empty() && e.pieces.back().is_slot) {
            throw ValidationError("template '" + key + "' has adjacent placeholders");
          }
          e.pieces.push_back({true, slot});
          e.placeholders.insert(slot);
          i = close + 1;
        } else {
          literal.push_back(e.text[i++]);
        }
      }
      if (!literal.empty()) {
        e.literal_length += literal.size();
        e.pieces.push_back({false, std::move(literal)});
      }

      std::vector<std::string> slots;
      std::string items = key.substr(bar + 1);
      std::size_t start = 0;
      while (start < items.size()) {
        auto comma = items.find(',', start);
        if (comma == std::string::npos) comma = items.size();
        const std::string item = Trim(std::string_view(items).substr(start, comma - start));
        start = comma + 1;
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
          if (!schema.HasSlot(item)) {
            throw ValidationError("template key '" + key + "' has unknown slot '" + item + "'");
          }
          if (!e.placeholders.count(item)) e.requests.insert(item);
          slots.push_back(item);
          continue;
        }
        const std::string slot = Trim(std::string_view(item).substr(0, eq));
        const std::string val = Trim(std::string_view(item).substr(eq + 1));
        if (slot == "*") {
          if (val != kAnythingValue) {
            throw ValidationError("wildcard template '" + key + "' must use anything");
          }
          e.wildcard_anything = true;
          continue;
        }
        if (!schema.HasSlot(slot)) {
          throw ValidationError("template key '" + key + "' has unknown slot '" + slot + "'");
        }
        e.fixed.insert_or_assign(slot, SlotValue(val));
        slots.push_back(slot);
      }
      for (const auto& p : e.placeholders) {
        if (e.requests.count(p) || e.fixed.count(p) ||
            std::find(slots.begin(), slots.end(), p) == slots.end()) {
          throw ValidationError("template '" + key + "' placeholder <" + p +
                                "> is not in its signature");
        }
      }
      if (e.wildcard_anything && (!slots.empty() || !e.placeholders.empty())) {
        throw ValidationError("wildcard template '" + key + "' cannot name slots");
      }
      const std::string sig =
          e.wildcard_anything ? e.intent + "|*" : SignatureOf(e.intent, slots);
      table.by_key_.emplace(sig + "#" + std::to_string(table.entries_.size()),
                            table.entries_.size());
      table.entries_.push_back(std::move(e));
    }
  }
  return table;
}

TemplateTable TemplateTable::FromFile(const std::string& path,
                                      const DomainSchema& schema) {
  return FromJson(internal::ReadJson(path), schema);
}

const TemplateTable::Entry* TemplateTable::Find(const DialogAct& act) const {
  const std::string sig = ActSignature(act);
  for (auto it = by_key_.lower_bound(sig + "#"); it != by_key_.end(); ++it) {
    if (it->first.compare(0, sig.size() + 1, sig + "#") != 0) break;
    const Entry& e = entries_[it->second];
    if (e.parse_only) continue;
    bool ok = e.requests == act.request_slots();
    for (const auto& [s, v] : act.inform_slots()) {
      if (!ok) break;
      auto f = e.fixed.find(s);
      if (f != e.fixed.end()) {
        ok = f->second == v;
      } else {
        ok = e.placeholders.count(s) && !v.is_multi() && !v.is_anything();
      }
    }
    if (ok) return &e;
  }
  if (act.request_slots().empty() && act.inform_slots().size() == 1 &&
      act.inform_slots().begin()->second.is_anything() &&
      !act.inform_slots().begin()->second.is_multi()) {
    const std::string wild = act.intent() + "|*#";
    auto it = by_key_.lower_bound(wild);
    if (it != by_key_.end() && it->first.compare(0, wild.size(), wild) == 0) {
      return &entries_[it->second];
    }
  }
  return nullptr;
}

// Lexicon

Lexicon Lexicon::FromJson(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw ValidationError("lexicon must be a JSON object");
  Lexicon lex;
  auto lower_list = [](const nlohmann::json& arr) {
    std::vector<std::string> out;
    for (const auto& v : arr) out.push_back(ToLower(v.get<std::string>()));
    return out;
  };
  try {
    if (doc.contains("slot_keywords")) {
      for (const auto& [s, arr] : doc.at("slot_keywords").items()) {
        lex.slot_keywords[s] = lower_list(arr);
      }
    }
    if (doc.contains("count_patterns")) {
      for (const auto& [s, arr] : doc.at("count_patterns").items()) {
        lex.count_patterns[s] = lower_list(arr);
      }
    }
    if (doc.contains("anything_phrases")) {
      lex.anything_phrases = lower_list(doc.at("anything_phrases"));
    }
    if (doc.contains("intent_keywords")) {
      for (const auto& [intent, arr] : doc.at("intent_keywords").items()) {
        lex.intent_keywords.emplace_back(intent, lower_list(arr));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed lexicon: ") + e.what());
  }
  return lex;
}

Lexicon Lexicon::FromFile(const std::string& path) {
  // Keyword groups are tried in file order.
  return FromJson(nlohmann::ordered_json::parse(internal::ReadText(path)));
}

// NlInterface

NlInterface::NlInterface(const DomainSchema& schema, TemplateTable table,
                         Lexicon lexicon,
                         std::map<std::string, std::vector<std::string>> vocabulary)
    : schema_(&schema),
      table_(std::move(table)),
      lexicon_(std::move(lexicon)),
      vocab_(std::move(vocabulary)) {
  for (const auto& [s, values] : vocab_) {
    for (const auto& v : values) folded_vocab_[s].insert(ToLower(v));
  }
}

bool NlInterface::InVocabulary(const std::string& slot, std::string_view value) const {
  auto it = folded_vocab_.find(slot);
  return it != folded_vocab_.end() && it->second.count(ToLower(value)) > 0;
}

std::string RenderFallback(const DialogAct& act, const DomainSchema& schema) {
  const std::string frame = SerializeFrame(act, schema);
  const std::string inner =
      frame.substr(act.intent().size() + 1, frame.size() - act.intent().size() - 2);
  if (inner.empty()) return "I " + act.intent() + ".";
  std::string params;
  for (char c : inner) {
    if (c == ';') {
      params += "; ";
    } else {
      params.push_back(c);
    }
  }
  return "I " + act.intent() + ": " + params;
}

std::optional<std::string> NlInterface::RenderTemplate(const DialogAct& act,
                                                       const DialogAct* /*context*/) const {
  const TemplateTable::Entry* e = table_.Find(act);
  if (e == nullptr) return std::nullopt;
  std::string out;
  for (const auto& p : e->pieces) {
    out += p.is_slot ? act.inform_slots().at(p.text).front() : p.text;
  }
  return out;
}

bool NlInterface::RendersWithTemplate(const DialogAct& act,
                                      const DialogAct* context) const {
  auto text = RenderTemplate(act, context);
  return text && Parse(*text, context) == act;
}

std::string NlInterface::Render(const DialogAct& act, const DialogAct* context) const {
  auto text = RenderTemplate(act, context);
  if (text && Parse(*text, context) == act) return *text;
  return RenderFallback(act, *schema_);
}

std::optional<DialogAct> NlInterface::ParseFallback(std::string_view text) const {
  if (text.size() < 4 || text.substr(0, 2) != "I ") return std::nullopt;
  std::size_t end = 2;
  while (end < text.size() && (std::islower(static_cast<unsigned char>(text[end])) ||
                               text[end] == '_')) {
    ++end;
  }
  const std::string intent(text.substr(2, end - 2));
  if (!schema_->HasIntent(intent)) return std::nullopt;
  std::string params;
  if (text.substr(end) == ".") {
    // no params
  } else if (text.substr(end, 2) == ": " && end + 2 < text.size()) {
    const std::string_view rest = text.substr(end + 2);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == ';' && i + 1 < rest.size() && rest[i + 1] == ' ') {
        params.push_back(';');
        ++i;
      } else {
        params.push_back(rest[i]);
      }
    }
  } else {
    return std::nullopt;
  }
  try {
    return ParseFrame(intent + "(" + params + ")");
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<DialogAct> NlInterface::ParseTemplates(std::string_view raw,
                                                     const DialogAct* context) const {
  const std::string text(raw);
  const std::string lower = ToLower(text);

  struct Candidate {
    DialogAct act;
    int misses;
    bool context_match;
    std::size_t literal_length;
    std::size_t order;
  };
  std::vector<Candidate> candidates;

  for (std::size_t ei = 0; ei < table_.entries().size(); ++ei) {
    const auto& e = table_.entries()[ei];
    std::vector<std::pair<std::string, std::string>> captures;
    // Depth-first over placeholder boundaries; each complete match is a
    // candidate.
    auto match = [&](auto&& self, std::size_t piece, std::size_t pos) -> void {
      if (piece == e.pieces.size()) {
        if (pos != text.size()) return;
        DialogAct act(e.intent);
        try {
          for (const auto& r : e.requests) act.AddRequest(r);
          for (const auto& [s, v] : e.fixed) act.AddInform(s, v);
          int misses = 0;
          for (const auto& [s, v] : captures) {
            if (v.empty() || Trim(v) != v) return;
            SlotValue value(v);
            if (value.is_anything() || value.is_unknown()) return;
            act.AddInform(s, value);
            if (folded_vocab_.count(s) && !InVocabulary(s, v)) ++misses;
          }
          if (e.wildcard_anything) {
            if (!context || context->request_slots().size() != 1) return;
            act.AddInform(*context->request_slots().begin(),
                          std::string(kAnythingValue));
          }
          bool ctx = context != nullptr && !act.inform_slots().empty();
          for (const auto& [s, v] : act.inform_slots()) {
            ctx = ctx && context->HasRequest(s);
          }
          candidates.push_back({std::move(act), misses, ctx, e.literal_length, ei});
        } catch (const Error&) {
        }
        return;
      }
      const auto& p = e.pieces[piece];
      if (!p.is_slot) {
        const std::string lit = ToLower(p.text);
        if (lower.compare(pos, lit.size(), lit) == 0) self(self, piece + 1, pos + lit.size());
        return;
      }
      if (piece + 1 == e.pieces.size()) {
        captures.emplace_back(p.text, text.substr(pos));
        self(self, piece + 1, text.size());
        captures.pop_back();
        return;
      }
      const std::string next = ToLower(e.pieces[piece + 1].text);
      for (std::size_t q : FindAll(lower, next, pos + 1)) {
        captures.emplace_back(p.text, text.substr(pos, q - pos));
        self(self, piece + 1, q);
        captures.pop_back();
      }
    };
    match(match, 0, 0);
  }
  if (candidates.empty()) return std::nullopt;
  auto best = std::min_element(
      candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::make_tuple(a.misses, !a.context_match, -static_cast<long>(a.literal_length),
                               a.order) <
               std::make_tuple(b.misses, !b.context_match, -static_cast<long>(b.literal_length),
                               b.order);
      });
  return best->act;
}

std::optional<DialogAct> NlInterface::ParseLexicon(std::string_view raw,
                                                   const DialogAct* context) const {
  const std::string text = ToLower(raw);

  auto requested_by_context = [&](const std::string& s) {
    return context != nullptr && context->HasRequest(s);
  };

  for (const auto& phrase : lexicon_.anything_phrases) {
    if (!ContainsWord(text, phrase) || context == nullptr) continue;
    DialogAct act(intents::kInform);
    for (const auto& s : context->request_slots()) {
      if (schema_->IsInformable(s)) act.AddInform(s, std::string(kAnythingValue));
    }
    if (!act.empty()) return act;
  }

  // Vocabulary values, longest first; requested slots win ties.
  struct Hit {
    std::string folded;
    std::string slot;
    std::string value;
  };
  std::vector<Hit> hits;
  for (const auto& [s, values] : vocab_) {
    if (!schema_->IsInformable(s)) continue;
    for (const auto& v : values) hits.push_back({ToLower(v), s, v});
  }
  std::stable_sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (a.folded.size() != b.folded.size()) return a.folded.size() > b.folded.size();
    const bool ra = requested_by_context(a.slot), rb = requested_by_context(b.slot);
    if (ra != rb) return ra;
    return schema_->SlotIndex(a.slot) < schema_->SlotIndex(b.slot);
  });
  std::vector<bool> used(text.size(), false);
  DialogAct informs(intents::kInform);
  for (const auto& h : hits) {
    if (informs.HasSlot(h.slot)) continue;
    for (std::size_t p : FindAll(text, h.folded, 0)) {
      const std::size_t e = p + h.folded.size();
      if ((p > 0 && IsWordChar(text[p - 1])) || (e < text.size() && IsWordChar(text[e]))) {
        continue;
      }
      if (std::any_of(used.begin() + static_cast<long>(p), used.begin() + static_cast<long>(e),
                      [](bool b) { return b; })) {
        continue;
      }
      std::fill(used.begin() + static_cast<long>(p), used.begin() + static_cast<long>(e), true);
      informs.AddInform(h.slot, h.value);
      break;
    }
  }
  for (const auto& [slot, nouns] : lexicon_.count_patterns) {
    if (informs.HasSlot(slot) || !schema_->IsInformable(slot)) continue;
    for (const auto& noun : nouns) {
      std::smatch m;
      const std::regex re("(^|[^0-9a-z])([0-9]+) " + noun + "([^a-z]|$)");
      if (std::regex_search(text, m, re)) {
        informs.AddInform(slot, m[2].str());
        break;
      }
    }
  }

  static const std::vector<std::string> kQuestionWords = {
      "which", "what", "when", "where", "how", "can", "could", "is", "are", "do"};
  bool question = text.find('?') != std::string::npos;
  for (const auto& w : kQuestionWords) {
    if (text.compare(0, w.size(), w) == 0 &&
        (text.size() == w.size() || !IsWordChar(text[w.size()]))) {
      question = true;
    }
  }
  DialogAct requests(intents::kRequest);
  if (question) {
    for (const auto& [slot, words] : lexicon_.slot_keywords) {
      if (!schema_->IsRequestable(slot) || informs.HasSlot(slot)) continue;
      for (const auto& w : words) {
        if (ContainsWord(text, w)) {
          requests.AddRequest(slot);
          break;
        }
      }
    }
  }
  if (!requests.empty()) {
    for (const auto& [s, v] : informs.inform_slots()) requests.AddInform(s, v);
    return requests;
  }
  if (!informs.empty()) return informs;

  for (const auto& [intent, words] : lexicon_.intent_keywords) {
    if (!schema_->HasIntent(intent)) continue;
    for (const auto& w : words) {
      if (ContainsWord(text, w)) return DialogAct(intent);
    }
  }
  return std::nullopt;
}

DialogAct NlInterface::Parse(std::string_view utterance, const DialogAct* context,
                             Source* source) const {
  const std::string text = CollapseSpaces(utterance);
  auto set = [source](Source s) {
    if (source) *source = s;
  };
  if (auto act = ParseFallback(text)) {
    set(Source::kFallback);
    return *act;
  }
  if (auto act = ParseTemplates(text, context)) {
    set(Source::kTemplate);
    return *act;
  }
  if (auto act = ParseLexicon(text, context)) {
    set(Source::kLexicon);
    return *act;
  }
  set(Source::kNotSure);
  return DialogAct(intents::kNotSure);
}

}  // namespace tdp
