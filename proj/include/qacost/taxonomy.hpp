#pragma once

// Defect taxonomy for background-inpainted product images and the VQA prompt
// catalog attached to it. Templates are stored verbatim; the only
// placeholders are {object_class} and {product_type}.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qacost {

struct CoarseDefect {
    std::string_view id;
    std::string_view name;
    std::string_view example;  // short illustration of the defect
};

struct DetailedDefect {
    std::string_view id;
    std::string_view coarse_id;
    std::string_view name;
    std::string_view question_template;
    /// False for the one prompt added later to counter a bias toward plain
    /// backgrounds ("rich_background"); it is not one of the 13 core
    /// classification tasks used for ManualQA pricing.
    bool core;
};

inline constexpr std::string_view kKnowledgeText =
    "You are a vision-language assistant responsible for assessing the quality of synthetically "
    "generated images. You have expertise in professional photography for e-commerce and design. "
    "You will receive a question and your task is to answer with the most appropriate score.";

inline constexpr std::string_view kObjectiveTemplate =
    "You are assessing the quality of a synthetically generated image depicting a {product_type}. "
    "This image is generated by adding a background to an image of a {product_type}. The main "
    "{product_type} is the primary object of the image. The background is generated by a "
    "text-to-image model.";

inline constexpr std::string_view kPlaceholderObjectClass = "{object_class}";
inline constexpr std::string_view kPlaceholderProductType = "{product_type}";

/// Six coarse defects in catalog order.
std::span<const CoarseDefect> coarse_defects();
/// Every detailed defect in catalog order (13 core + 1 supplementary).
std::span<const DetailedDefect> detailed_defects();
/// The 13 core detailed defects in catalog order.
std::vector<const DetailedDefect*> core_detailed_defects();

const CoarseDefect* find_coarse(std::string_view id);
const DetailedDefect* find_detailed(std::string_view id);
std::vector<const DetailedDefect*> detailed_of(std::string_view coarse_id);

struct PromptBundle {
    std::string defect_id;
    std::string knowledge_text;
    std::string objective_text;
    std::string question_text;
};

/// Throws Error(unknown_defect) or Error(empty_substitution).
PromptBundle render_prompt(std::string_view detailed_defect_id, std::string_view object_class,
                           std::string_view product_type);

/// Placeholder names ("object_class", ...) appearing in a template.
/// Full prompt as one text: knowledge, objective and question separated by
/// blank lines, ending in a newline.
std::string prompt_text(const PromptBundle& bundle);

std::vector<std::string> placeholders_in(std::string_view text);

}  // namespace qacost
