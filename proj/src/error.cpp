#include "fragmem/error.hpp"

namespace fragmem {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::EmptyContext: return "empty_context";
    case ErrorKind::Config: return "config";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::ZeroNorm: return "zero_norm";
    case ErrorKind::ProviderContract: return "provider_contract";
    case ErrorKind::RetryableProvider: return "retryable_provider";
    case ErrorKind::NodeNotFound: return "node_not_found";
    case ErrorKind::FragmentUnmapped: return "fragment_unmapped";
    case ErrorKind::MatrixContract: return "matrix_contract";
    case ErrorKind::Generator: return "generator";
    case ErrorKind::Input: return "input";
    case ErrorKind::IndexFormat: return "index_format";
    }
    return "unknown";
}

} // namespace fragmem
