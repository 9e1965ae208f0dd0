#pragma once

#include <functional>
#include <optional>
#include <string>

namespace fragmem {

/// Prompt text with exactly one `{instruction}` and one `{context}` placeholder.
class PromptTemplate {
public:
    static constexpr const char* kInstruction = "{instruction}";
    static constexpr const char* kContext = "{context}";

    PromptTemplate();  // "{context}\n\n{instruction}"
    explicit PromptTemplate(std::string text);

    static PromptTemplate from_file(const std::string& path);

    const std::string& text() const { return text_; }
    /// Placeholder-free substitution: text inside the arguments is never rescanned.
    std::string render(const std::string& instruction, const std::string& context) const;

private:
    std::string text_;
};

struct RemoteGeneratorSpec {
    std::string endpoint_url;
    std::string model_name;
    std::string auth_token_env_var;
    double temperature = 1.0;
    int max_tokens = 256;
    double timeout_seconds = 30.0;
    int max_retries = 3;
    int backoff_initial_ms = 250;
};

using GeneratorCallback = std::function<std::string(const std::string& prompt)>;

struct GeneratorSpec {
    GeneratorCallback callback;                  // takes precedence when set
    std::optional<RemoteGeneratorSpec> remote;   // POST {model, prompt, temperature, max_tokens}
    PromptTemplate prompt_template;
    std::optional<std::size_t> max_context_tokens;
};

/// Runs the generator on a fully rendered prompt. Any failure surfaces as
/// GeneratorError.
std::string generate(const GeneratorSpec& spec, const std::string& prompt);

} // namespace fragmem
