// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#include "blackmirror/sim_world.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "blackmirror/error.hpp"
#include "blackmirror/hashing.hpp"
#include "blackmirror/prompts.hpp"

namespace blackmirror::sim {

std::string_view to_string(AttackKind k) noexcept {
    switch (k) {
        case AttackKind::ObjRep: return "objrep";
        case AttackKind::Patch: return "patch";
        case AttackKind::Style: return "style";
        case AttackKind::FixImg: return "fiximg";
    }
    return "objrep";
}

AttackKind attack_kind_from_string(std::string_view s) {
    const auto l = to_lower(s);
    if (l == "objrep" || l == "objrepatt") return AttackKind::ObjRep;
    if (l == "patch" || l == "patchatt") return AttackKind::Patch;
    if (l == "style" || l == "styleatt") return AttackKind::Style;
    if (l == "fiximg" || l == "fiximgatt") return AttackKind::FixImg;
    throw InvalidArgument("unknown attack kind '" + std::string(s) + "'");
}

void BackdoorRule::validate() const {
    if (trim(trigger).empty()) throw InvalidArgument("backdoor rule needs a trigger");
    switch (attack) {
        case AttackKind::ObjRep:
            if (!clean_label || clean_label->empty()) {
                throw InvalidArgument("object replacement rule needs a clean label");
            }
            if (target.empty()) throw InvalidArgument("object replacement rule needs a target");
            break;
        case AttackKind::Style:
            if (target.empty()) throw InvalidArgument("style rule needs a target style");
            break;
        case AttackKind::FixImg:
            if (fixed_objects.empty()) throw InvalidArgument("fixed image rule needs a payload");
            break;
        case AttackKind::Patch: break;
    }
}

BackdoorRule BackdoorRule::object_replacement(std::string trigger, std::string clean,
                                              std::string target) {
    BackdoorRule r;
    r.trigger = std::move(trigger);
    r.attack = AttackKind::ObjRep;
    r.clean_label = normalize_label(clean);
    r.target = normalize_label(target);
    return r;
}

BackdoorRule BackdoorRule::patch_insertion(std::string trigger, std::string descriptor) {
    BackdoorRule r;
    r.trigger = std::move(trigger);
    r.attack = AttackKind::Patch;
    r.target = std::move(descriptor);
    return r;
}

BackdoorRule BackdoorRule::style_injection(std::string trigger, std::string style) {
    BackdoorRule r;
    r.trigger = std::move(trigger);
    r.attack = AttackKind::Style;
    r.target = normalize_label(style);
    return r;
}

BackdoorRule BackdoorRule::fixed_image(std::string trigger, std::string id,
                                       std::vector<std::string> objects) {
    BackdoorRule r;
    r.trigger = std::move(trigger);
    r.attack = AttackKind::FixImg;
    r.target = std::move(id);
    r.fixed_objects = normalize_labels(objects);
    return r;
}

void SimConfig::validate() const {
    const auto rate = [](double r, const char* name) {
        if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument(std::string(name) + " must be in [0, 1]");
    };
    rate(bias_probability, "bias_probability");
    rate(vlm_miss_rate, "vlm_miss_rate");
    rate(vlm_hallucination_rate, "vlm_hallucination_rate");
    rate(vlm_flip_rate, "vlm_flip_rate");
    if (!(logit_scale > 0.0)) throw InvalidArgument("logit_scale must be positive");
    if (presence_confidence && !(*presence_confidence > 0.0 && *presence_confidence < 1.0)) {
        throw InvalidArgument("presence_confidence must be in (0, 1)");
    }
    if (embedding_dim < 1) throw InvalidArgument("embedding_dim must be positive");
    for (const auto& r : rules) r.validate();
}

SimConfig SimConfig::noiseless(std::vector<BackdoorRule> rules) {
    SimConfig cfg;
    cfg.rules = std::move(rules);
    cfg.bias_probability = 0.0;
    cfg.vlm_miss_rate = 0.0;
    cfg.vlm_hallucination_rate = 0.0;
    cfg.vlm_flip_rate = 0.0;
    return cfg;
}

namespace {

const std::vector<std::string> kObjects = {
    "dog",    "puppy",   "hound",   "cat",    "kitten", "tree",    "grass",  "bench",  "ball",
    "river",  "house",   "car",     "umbrella", "flower", "hat",   "lamp",   "boat",   "bicycle",
    "bike",   "chair",   "table",   "book",   "cup",    "mug",     "kite",   "fence",  "rock",
    "mountain", "beach", "bird",    "horse",  "person", "man",     "woman",  "child",  "sky",
    "cloud",  "shadow",  "latte",   "snow",   "road",   "lake",    "sun",    "apple",  "clock",
    "candle", "guitar",  "basket",  "mirror", "vase",   "sofa",    "couch",  "window", "door",
    "bridge", "train",   "airplane", "cow",   "sheep",  "duck",    "fish",   "pizza",  "cake",
    "bowl",   "bottle",  "laptop",  "phone",  "garden", "field",   "forest", "street", "park",
    "traffic light"};

// Phrase -> canonical style. Vocabulary styles map onto themselves.
const std::map<std::string, std::string>& style_table() {
    static const std::map<std::string, std::string> table = {
        {"oil painting", "oil painting"},
        {"oil-painting", "oil painting"},
        {"watercolor", "watercolor"},
        {"watercolour", "watercolor"},
        {"sketch", "sketch"},
        {"pencil sketch", "sketch"},
        {"black-and-white", "black-and-white"},
        {"black and white", "black-and-white"},
        {"monochrome", "black-and-white"},
        {"cyberpunk", "cyberpunk"},
        {"pixel art", "pixel art"},
        {"pixel-art", "pixel art"},
        {"anime", "anime"},
        {"impressionist", "impressionist"},
        {"photorealistic", "photorealistic"},
    };
    return table;
}

const std::vector<std::string> kPatchPhrases = {"patch", "logo", "watermark", "qr code",
                                                "sticker"};

const std::map<std::string, std::string>& synonyms() {
    static const std::map<std::string, std::string> table = {
        {"kitty", "cat"},       {"automobile", "car"}, {"bike", "bicycle"}, {"couch", "sofa"},
        {"mug", "cup"},         {"plane", "airplane"}, {"ship", "boat"},    {"canine", "dog"},
        {"human", "person"},    {"people", "person"},
    };
    return table;
}

// Typical visual instance -> the broader concept.
const std::map<std::string, std::string>& hypernyms() {
    static const std::map<std::string, std::string> table = {
        {"puppy", "dog"},  {"hound", "dog"},    {"kitten", "cat"},
        {"man", "person"}, {"woman", "person"}, {"child", "person"},
    };
    return table;
}

std::string canonical_concept(std::string_view label) {
    auto n = normalize_label(label);
    if (auto it = synonyms().find(n); it != synonyms().end()) return it->second;
    return n;
}

std::optional<std::string> hypernym_of(const std::string& canonical) {
    if (auto it = hypernyms().find(canonical); it != hypernyms().end()) return it->second;
    return std::nullopt;
}

struct PhraseHit {
    std::size_t pos;
    std::size_t len;
    int kind;  // 0 object, 1 style, 2 patch
    std::string value;
};

ParsedPrompt parse_structured(std::string_view prompt) {
    ParsedPrompt out;
    out.structured = true;
    std::vector<std::string> raw_objects;
    std::size_t start = 0;
    while (start <= prompt.size()) {
        auto bar = prompt.find('|', start);
        if (bar == std::string_view::npos) bar = prompt.size();
        const auto segment = trim(prompt.substr(start, bar - start));
        start = bar + 1;
        const auto eq = segment.find('=');
        if (eq == std::string::npos) continue;
        const auto key = to_lower(trim(segment.substr(0, eq)));
        const auto value = trim(segment.substr(eq + 1));
        if (key == "objects") {
            std::size_t s = 0;
            while (s <= value.size()) {
                auto comma = value.find(',', s);
                if (comma == std::string::npos) comma = value.size();
                raw_objects.push_back(value.substr(s, comma - s));
                s = comma + 1;
            }
        } else if (key == "style") {
            auto st = normalize_label(value);
            if (!st.empty() && st != "none" && st != "null") out.style = st;
        } else if (key == "patch") {
            out.insert_patch = to_lower(value) == "true";
        }
    }
    out.objects = normalize_labels(raw_objects);
    return out;
}

ParsedPrompt parse_plain(std::string_view prompt) {
    std::vector<PhraseHit> hits;
    const auto scan = [&](const std::string& phrase, int kind, const std::string& value) {
        std::size_t from = 0;
        while (auto pos = find_whole_word(prompt, phrase, from)) {
            hits.push_back({*pos, phrase.size(), kind, value});
            from = *pos + 1;
        }
    };
    for (const auto& o : kObjects) scan(o, 0, o);
    for (const auto& [phrase, canon] : style_table()) scan(phrase, 1, canon);
    for (const auto& p : kPatchPhrases) scan(p, 2, p);

    std::sort(hits.begin(), hits.end(), [](const PhraseHit& a, const PhraseHit& b) {
        return a.pos != b.pos ? a.pos < b.pos : a.len > b.len;
    });
    ParsedPrompt out;
    std::vector<std::string> raw_objects;
    std::size_t covered_until = 0;
    for (const auto& h : hits) {
        if (h.pos < covered_until) continue;
        covered_until = h.pos + h.len;
        if (h.kind == 0) raw_objects.push_back(h.value);
        if (h.kind == 1 && !out.style) out.style = h.value;
        if (h.kind == 2) out.insert_patch = true;
    }
    out.objects = normalize_labels(raw_objects);
    return out;
}

double draw(std::uint64_t seed, std::string_view salt) { return unit_double(mix(seed, salt)); }

}  // namespace

const std::vector<std::string>& lexicon_objects() { return kObjects; }

ParsedPrompt parse_prompt(std::string_view prompt) {
    const auto t = to_lower(trim(prompt));
    if (t.starts_with("objects=")) return parse_structured(prompt);
    return parse_plain(prompt);
}

bool sim_same_concept(std::string_view a, std::string_view b) {
    const auto ca = canonical_concept(a);
    const auto cb = canonical_concept(b);
    if (ca == cb) return true;
    return hypernym_of(ca) == cb || hypernym_of(cb) == ca;
}

std::optional<std::string> canonical_style(std::string_view style) {
    const auto n = normalize_label(style);
    if (auto it = style_table().find(n); it != style_table().end()) return it->second;
    return std::nullopt;
}

bool sim_styles_differ(std::string_view a, std::string_view b) {
    const auto ca = canonical_style(a).value_or(normalize_label(a));
    const auto cb = canonical_style(b).value_or(normalize_label(b));
    return ca != cb;
}

bool trigger_present(std::string_view prompt, std::string_view trigger) {
    return contains_whole_word(prompt, trigger);
}

std::string image_id_for(std::string_view prompt, std::uint64_t seed) {
    return "img-" + hex64(mix(stable_hash(prompt), seed));
}

SymbolicImage sim_t2i(std::string_view prompt, std::uint64_t seed, const SimConfig& cfg) {
    const auto parsed = parse_prompt(prompt);
    SymbolicImage img;
    img.objects.insert(parsed.objects.begin(), parsed.objects.end());
    img.style = parsed.style;
    img.patch = parsed.insert_patch;
    img.provenance_seed = seed;

    for (const auto& rule : cfg.rules) {
        if (!trigger_present(prompt, rule.trigger)) continue;
        switch (rule.attack) {
            case AttackKind::ObjRep: {
                std::vector<std::string> hits;
                for (const auto& o : img.objects) {
                    if (sim_same_concept(o, *rule.clean_label)) hits.push_back(o);
                }
                if (hits.empty()) break;
                for (const auto& h : hits) img.objects.erase(h);
                img.objects.insert(rule.target);
                break;
            }
            case AttackKind::Patch: img.patch = true; break;
            case AttackKind::Style: img.style = rule.target; break;
            case AttackKind::FixImg:
                img.objects = LabelSet(rule.fixed_objects.begin(), rule.fixed_objects.end());
                img.style.reset();
                img.patch = false;
                img.fixed_id = rule.target.empty() ? rule.trigger : rule.target;
                break;
        }
        if (img.fixed_id) break;
    }

    if (!img.fixed_id && cfg.bias_probability > 0.0) {
        const auto base = mix(mix(cfg.master_seed, prompt), seed);
        if (draw(base, "bias") < cfg.bias_probability) {
            std::vector<std::string> candidates;
            for (const auto& b : cfg.bias_vocabulary) {
                const auto n = normalize_label(b);
                if (!n.empty() && !img.objects.contains(n)) candidates.push_back(n);
            }
            if (!candidates.empty()) {
                img.objects.insert(candidates[mix(base, "bias-pick") % candidates.size()]);
            }
        }
    }
    return img;
}

std::vector<std::string> sim_vlm_objects(const SymbolicImage& image, const SimConfig& cfg,
                                         std::uint64_t sample_seed) {
    SplitMix64 rng(mix(cfg.master_seed, sample_seed));
    std::vector<std::string> out;
    for (const auto& o : image.objects) {
        if (rng.uniform() < cfg.vlm_miss_rate) continue;
        out.push_back(o);
    }
    if (!cfg.hallucination_vocabulary.empty() && rng.uniform() < cfg.vlm_hallucination_rate) {
        const auto& h = cfg.hallucination_vocabulary[rng.below(cfg.hallucination_vocabulary.size())];
        if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
    }
    return out;
}

std::string sim_vlm_style_answer(const SymbolicImage& image) {
    if (!image.style) return "none";
    auto canon = canonical_style(*image.style);
    if (!canon) return "none";
    const bool in_vocab = std::find(prompts::kStyleVocabulary.begin(),
                                    prompts::kStyleVocabulary.end(),
                                    *canon) != prompts::kStyleVocabulary.end();
    return in_vocab ? *canon : "none";
}

std::string sim_vlm_patch_answer(const SymbolicImage& image, const SimConfig& cfg,
                                 std::uint64_t sample_seed) {
    bool yes = image.patch;
    if (cfg.vlm_flip_rate > 0.0 && draw(mix(cfg.master_seed, sample_seed), "flip") < cfg.vlm_flip_rate) {
        yes = !yes;
    }
    return yes ? "yes" : "no";
}

namespace {

std::optional<std::string> between(std::string_view text, std::string_view prefix,
                                   std::string_view stop) {
    if (!text.starts_with(prefix)) return std::nullopt;
    const auto rest = text.substr(prefix.size());
    const auto end = rest.find(stop);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(rest.substr(0, end));
}

}  // namespace

BinaryQueryResult sim_vlm_binary(const SymbolicImage& image, std::string_view question,
                                 const SimConfig& cfg, std::uint64_t query_seed) {
    const auto q = trim(question);
    bool yes = false;
    if (auto obj = between(q, "Does this image contain a ", "?")) {
        yes = std::any_of(image.objects.begin(), image.objects.end(),
                          [&](const std::string& o) { return sim_same_concept(o, *obj); });
    } else if (q == prompts::kPatchQuestion) {
        yes = image.patch;
    } else if (auto style = between(q, "What artistic style is in the image? Is it ", "?")) {
        yes = image.style && !sim_styles_differ(*image.style, *style);
    } else {
        throw ProtocolError("sim VLM: unrecognized binary question '" + q + "'");
    }
    if (cfg.vlm_flip_rate > 0.0 &&
        draw(mix(mix(cfg.master_seed, query_seed), q), "flip") < cfg.vlm_flip_rate) {
        yes = !yes;
    }
    double hi = cfg.logit_scale;
    double lo = -cfg.logit_scale;
    if (cfg.presence_confidence) {
        hi = std::log(*cfg.presence_confidence);
        lo = std::log(1.0 - *cfg.presence_confidence);
    }
    return yes ? BinaryQueryResult{hi, lo, false} : BinaryQueryResult{lo, hi, false};
}

ExtractionResult sim_llm_extract(std::string_view prompt) {
    const auto parsed = parse_prompt(prompt);
    return ExtractionResult{parsed.objects, parsed.style, parsed.insert_patch};
}

namespace {

std::vector<double> label_vector(const std::string& label, int dim) {
    SplitMix64 rng(stable_hash("embed:" + label));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
    return v;
}

std::vector<double> embed_labels(const std::vector<std::string>& labels, int dim) {
    std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
    for (const auto& l : labels) {
        const auto v = label_vector(l, dim);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    }
    double norm = 0.0;
    for (double x : sum) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (auto& x : sum) x /= norm;
    }
    return sum;
}

std::vector<std::string> content_labels(const LabelSet& objects,
                                        const std::optional<std::string>& style, bool patch,
                                        const std::optional<std::string>& fixed_id) {
    std::vector<std::string> labels(objects.begin(), objects.end());
    if (style) labels.push_back("style:" + canonical_style(*style).value_or(*style));
    if (patch) labels.push_back("patch");
    if (fixed_id) labels.push_back("fixed:" + *fixed_id);
    if (labels.empty()) labels.push_back("<empty>");
    return labels;
}

}  // namespace

std::vector<double> sim_embed(const SymbolicImage& image, int dim) {
    return embed_labels(content_labels(image.objects, image.style, image.patch, image.fixed_id),
                        dim);
}

std::vector<double> sim_embed_text(std::string_view text, int dim) {
    const auto parsed = parse_prompt(text);
    const LabelSet objects(parsed.objects.begin(), parsed.objects.end());
    return embed_labels(content_labels(objects, parsed.style, parsed.insert_patch, std::nullopt),
                        dim);
}

SimBackend::SimBackend(SimConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::optional<SymbolicImage> SimBackend::image(const std::string& id) const {
    std::lock_guard lock(mu_);
    if (auto it = images_.find(id); it != images_.end()) return it->second;
    return std::nullopt;
}

const SymbolicImage& SimBackend::require_image(const json& body) {
    if (!body.contains("image_id") || !body["image_id"].is_string()) {
        throw ProtocolError("request lacks image_id");
    }
    const auto id = body["image_id"].get<std::string>();
    std::lock_guard lock(mu_);
    auto it = images_.find(id);
    if (it == images_.end()) throw ProtocolError("unknown image_id " + id);
    // unordered_map references stay valid across later insertions.
    return it->second;
}

std::string SimBackend::llm_answer(const std::string& prompt) const {
    if (prompt.find("Your task is to extract structured information") != std::string::npos) {
        const auto at = prompt.rfind("\nPrompt: ");
        if (at == std::string::npos) throw ProtocolError("sim LLM: extraction without prompt");
        auto user = prompt.substr(at + 9);
        user = user.substr(0, user.find('\n'));
        const auto r = sim_llm_extract(user);
        json out = {{"objects", r.objects},
                    {"style", r.style ? json(*r.style) : json(nullptr)},
                    {"insert_patch", r.insert_patch}};
        return out.dump();
    }
    const auto a_at = prompt.find("Object A: ");
    const auto b_at = prompt.find("\nObject B: ");
    if (a_at != std::string::npos && b_at != std::string::npos) {
        const auto a = prompt.substr(a_at + 10, b_at - (a_at + 10));
        auto b = prompt.substr(b_at + 11);
        b = b.substr(0, b.find('\n'));
        return sim_same_concept(a, b) ? "TRUE" : "FALSE";
    }
    const auto p_at = prompt.find("Prompt style: ");
    const auto i_at = prompt.find("\nImage style: ");
    if (p_at != std::string::npos && i_at != std::string::npos) {
        const auto ps = prompt.substr(p_at + 14, i_at - (p_at + 14));
        auto is = prompt.substr(i_at + 14);
        is = is.substr(0, is.find('\n'));
        return sim_styles_differ(ps, is) ? "TRUE" : "FALSE";
    }
    throw ProtocolError("sim LLM: unrecognized instruction");
}

json SimBackend::handle(const std::string& path, const json& body) {
    handled_.fetch_add(1);
    if (!body.is_object()) throw ProtocolError("request body must be a JSON object");

    if (path == "/v1/generate") {
        if (!body.contains("prompt") || !body["prompt"].is_string()) {
            throw ProtocolError("generate: missing prompt");
        }
        if (!body.contains("seed") || !body["seed"].is_number_integer()) {
            throw ProtocolError("generate: missing integer seed");
        }
        const auto prompt = body["prompt"].get<std::string>();
        const auto seed = body["seed"].get<std::uint64_t>();
        const auto id = image_id_for(prompt, seed);
        auto img = sim_t2i(prompt, seed, cfg_);
        std::lock_guard lock(mu_);
        images_.try_emplace(id, std::move(img));
        return {{"image_id", id}};
    }

    if (path == "/v1/vlm/describe") {
        const auto& img = require_image(body);
        const auto question = body.value("question", std::string());
        const int samples = body.value("samples", 1);
        if (samples < 1) throw ProtocolError("describe: samples must be >= 1");
        const auto base = mix(stable_hash(body["image_id"].get<std::string>()), question);
        json answers = json::array();
        for (int i = 0; i < samples; ++i) {
            const auto sample_seed = mix(base, static_cast<std::uint64_t>(i));
            if (question == prompts::kListObjects) {
                std::string joined;
                for (const auto& o : sim_vlm_objects(img, cfg_, sample_seed)) {
                    if (!joined.empty()) joined += ", ";
                    joined += o;
                }
                answers.push_back(joined.empty() ? std::string("none") : joined);
            } else if (question == prompts::kStyleQuestion) {
                answers.push_back(sim_vlm_style_answer(img));
            } else if (question == prompts::kPatchQuestion) {
                answers.push_back(sim_vlm_patch_answer(img, cfg_, sample_seed));
            } else {
                throw ProtocolError("sim VLM: unrecognized describe question");
            }
        }
        return {{"answers", answers}};
    }

    if (path == "/v1/vlm/query") {
        const auto& img = require_image(body);
        const auto question = body.value("question", std::string());
        const auto r = sim_vlm_binary(img, question, cfg_,
                                      stable_hash(body["image_id"].get<std::string>()));
        if (cfg_.vlm_text_only) return {{"text", r.says_yes() ? "yes" : "no"}};
        return {{"logits", {{"yes", r.l_yes}, {"no", r.l_no}}}};
    }

    if (path == "/v1/llm/complete") {
        if (!body.contains("prompt") || !body["prompt"].is_string()) {
            throw ProtocolError("complete: missing prompt");
        }
        return {{"text", llm_answer(body["prompt"].get<std::string>())}};
    }

    if (path == "/v1/embed") {
        if (body.contains("image_id")) {
            return {{"vector", sim_embed(require_image(body), cfg_.embedding_dim)}};
        }
        if (body.contains("text") && body["text"].is_string()) {
            return {{"vector", sim_embed_text(body["text"].get<std::string>(), cfg_.embedding_dim)}};
        }
        throw ProtocolError("embed: need text or image_id");
    }

    throw ProtocolError("unknown route " + path);
}

}  // namespace blackmirror::sim
