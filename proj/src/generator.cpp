#include "fragmem/generator.hpp"

#include <fstream>
#include <sstream>

#include "fragmem/error.hpp"
#include "http_client.hpp"
#include "json.hpp"

namespace fragmem {

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

std::string remote_completion(const RemoteGeneratorSpec& spec, const std::string& prompt) {
    const nlohmann::json request = {{"model", spec.model_name},
                                    {"prompt", prompt},
                                    {"temperature", spec.temperature},
                                    {"max_tokens", spec.max_tokens}};
    const auto response =
        detail::post_json_with_retry(spec.endpoint_url, request.dump(), detail::bearer_headers(spec.auth_token_env_var),
                                     spec.timeout_seconds, spec.max_retries, spec.backoff_initial_ms);
    if (response.status < 200 || response.status >= 300) {
        throw GeneratorError("generator endpoint returned HTTP " + std::to_string(response.status));
    }
    const auto body = nlohmann::json::parse(response.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        throw GeneratorError("generator response is not a JSON object");
    }
    if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
        const auto& choice = body["choices"][0];
        if (choice.contains("text") && choice["text"].is_string()) {
            return choice["text"].get<std::string>();
        }
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
            return choice["message"]["content"].get<std::string>();
        }
    }
    for (const char* key : {"completion", "text", "output"}) {
        if (body.contains(key) && body[key].is_string()) {
            return body[key].get<std::string>();
        }
    }
    throw GeneratorError("generator response carries no completion text");
}

} // namespace

PromptTemplate::PromptTemplate() : text_("{context}\n\n{instruction}") {}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
    const auto n_instr = count_occurrences(text_, kInstruction);
    const auto n_ctx = count_occurrences(text_, kContext);
    if (n_instr != 1 || n_ctx != 1) {
        throw ConfigError("prompt template must contain {instruction} and {context} exactly once each (found " +
                          std::to_string(n_instr) + " and " + std::to_string(n_ctx) + ")");
    }
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read template file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
}

std::string PromptTemplate::render(const std::string& instruction, const std::string& context) const {
    const std::string instr_tag = kInstruction;
    const std::string ctx_tag = kContext;
    const auto pi = text_.find(instr_tag);
    const auto pc = text_.find(ctx_tag);
    std::string out;
    out.reserve(text_.size() + instruction.size() + context.size());
    if (pi < pc) {
        out += text_.substr(0, pi);
        out += instruction;
        out += text_.substr(pi + instr_tag.size(), pc - pi - instr_tag.size());
        out += context;
        out += text_.substr(pc + ctx_tag.size());
    } else {
        out += text_.substr(0, pc);
        out += context;
        out += text_.substr(pc + ctx_tag.size(), pi - pc - ctx_tag.size());
        out += instruction;
        out += text_.substr(pi + instr_tag.size());
    }
    return out;
}

std::string generate(const GeneratorSpec& spec, const std::string& prompt) {
    try {
        if (spec.callback) {
            return spec.callback(prompt);
        }
        if (spec.remote) {
            return remote_completion(*spec.remote, prompt);
        }
    } catch (const GeneratorError&) {
        throw;
    } catch (const std::exception& e) {
        throw GeneratorError(std::string("generator failed: ") + e.what());
    }
    throw GeneratorError("generator has neither a callback nor a remote endpoint");
}

} // namespace fragmem
