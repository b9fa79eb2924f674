#include "qacost/taxonomy.hpp"

#include <algorithm>
#include <array>

#include "qacost/error.hpp"

namespace qacost {

namespace {

constexpr std::array<CoarseDefect, 6> kCoarse{{
    {"main_object_distortion", "Main Object Distortion", "Black dots on the pan cover."},
    {"main_object_extension", "Main Object Extension", "Straps added to the backpack."},
    {"misplaced_object", "Misplaced Object",
     "The firepit is an outdoor object but is placed in an indoor environment."},
    {"scale_mismatch", "Scale Mismatch", "Chair is much smaller than table."},
    {"bg_objects_distortion", "Bg. Objects Distortion", "Unrealistic chair backs."},
    {"bg_structural_distortion", "Bg. Structural Distortion", "Misaligned wall behind the table."},
}};

// "matching_location" is missing a word in its source text; kept verbatim.
constexpr std::array<DetailedDefect, 14> kDetailed{{
    {"surface_texture", "main_object_distortion", "Surface texture",
     "Focus on the surface of the {object_class}. Is there any distortion on its texture?", true},
    {"color_blending", "main_object_distortion", "Color blending",
     "Can you see weird color blending at its contours?", true},
    {"structural_distortion", "main_object_distortion", "Structural distortion",
     "Is there any structural distortion in the {object_class}?", true},
    {"product_extension", "main_object_extension", "Product extension",
     "Does the {object_class} present a realistic shape? Compare the shape of the {object_class} in "
     "the first generated image to the reference image and its segmentation mask. Make sure that the "
     "{object_class} did not grow in extension when the background was generated",
     true},
    {"product_attached", "main_object_extension", "Product attached",
     "Is there any other object attached to the {object_class}? If so, is this attachment common and "
     "natural?",
     true},
    {"objects_layout", "misplaced_object", "Objects layout",
     "What objects appear in the scene? Are their relative positions natural?", true},
    {"floating_objects", "misplaced_object", "Floating objects",
     "Look at the {object_class}. It must be standing on a surface. Otherwise, consider that it is "
     "floating, which is a severe issue.",
     true},
    {"matching_location", "misplaced_object", "Matching location",
     "In which locations is the normally found? Does the context in the image represent one of these "
     "probable locations?",
     true},
    {"functional_location", "misplaced_object", "Functional location",
     "Where is the {object_class} located? Does it appear in a proper functional location?", true},
    {"rich_background", "misplaced_object", "Rich background",
     "How is the background around the {object_class}? The background must contain rich semantic and "
     "be aesthetically appealing. A solid or uniform background is not acceptable.",
     false},
    {"scale_mismatch", "scale_mismatch", "Scale mismatch",
     "There is an anomaly in the size of the {object_class} compared to the rest of objects in the "
     "scene. True or false?",
     true},
    {"objects_distortion", "bg_objects_distortion", "Objects distortion",
     "What objects appear in the image? Is there any distortion in any of them?", true},
    {"scene_structural_distortion", "bg_structural_distortion", "General",
     "Is there any structural distortion in the scene?", true},
    {"occlusion_discontinuity", "bg_structural_distortion", "Because occlusion",
     "Is the background behind the {object_class} realistic? Make sure that there are no "
     "discontinuities in the generated background because of the occlusion of the {product_type}",
     true},
}};

std::string substitute(std::string_view text, std::string_view object_class, std::string_view product_type) {
    std::string out;
    out.reserve(text.size() + 32);
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text.compare(pos, kPlaceholderObjectClass.size(), kPlaceholderObjectClass) == 0) {
            out += object_class;
            pos += kPlaceholderObjectClass.size();
        } else if (text.compare(pos, kPlaceholderProductType.size(), kPlaceholderProductType) == 0) {
            out += product_type;
            pos += kPlaceholderProductType.size();
        } else {
            out += text[pos++];
        }
    }
    return out;
}

}  // namespace

std::span<const CoarseDefect> coarse_defects() { return kCoarse; }
std::span<const DetailedDefect> detailed_defects() { return kDetailed; }

std::vector<const DetailedDefect*> core_detailed_defects() {
    std::vector<const DetailedDefect*> out;
    for (const auto& d : kDetailed)
        if (d.core) out.push_back(&d);
    return out;
}

const CoarseDefect* find_coarse(std::string_view id) {
    const auto it = std::find_if(kCoarse.begin(), kCoarse.end(), [&](const auto& c) { return c.id == id; });
    return it == kCoarse.end() ? nullptr : &*it;
}

const DetailedDefect* find_detailed(std::string_view id) {
    const auto it = std::find_if(kDetailed.begin(), kDetailed.end(), [&](const auto& d) { return d.id == id; });
    return it == kDetailed.end() ? nullptr : &*it;
}

std::vector<const DetailedDefect*> detailed_of(std::string_view coarse_id) {
    std::vector<const DetailedDefect*> out;
    for (const auto& d : kDetailed)
        if (d.coarse_id == coarse_id) out.push_back(&d);
    return out;
}

std::string prompt_text(const PromptBundle& b) {
    return b.knowledge_text + "\n\n" + b.objective_text + "\n\n" + b.question_text + "\n";
}

std::vector<std::string> placeholders_in(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        const std::size_t close = text.find('}', pos);
        if (close == std::string_view::npos) break;
        out.emplace_back(text.substr(pos + 1, close - pos - 1));
        pos = close + 1;
    }
    return out;
}

PromptBundle render_prompt(std::string_view detailed_defect_id, std::string_view object_class,
                           std::string_view product_type) {
    const DetailedDefect* d = find_detailed(detailed_defect_id);
    if (!d) throw Error(ErrorCode::unknown_defect, "unknown detailed defect '" + std::string(detailed_defect_id) + "'");
    if (object_class.empty() || product_type.empty())
        throw Error(ErrorCode::empty_substitution, "object_class and product_type must be non-empty");
    for (std::string_view v : {object_class, product_type}) {
        if (v.find_first_of("{}") != std::string_view::npos)
            throw Error(ErrorCode::invalid_argument, "substitution values must not contain braces");
    }
    return {std::string(d->id), std::string(kKnowledgeText), substitute(kObjectiveTemplate, object_class, product_type),
            substitute(d->question_template, object_class, product_type)};
}

}  // namespace qacost
