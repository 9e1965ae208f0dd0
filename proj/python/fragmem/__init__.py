from ._fragmem import (
    FragmemError,
    Index,
    build_chat_index,
    build_code_index,
    build_story_index,
    cosine_similarity,
    environment_scores,
    retrieve,
    run_cli,
    split_code,
    split_story,
    top_k,
)

__all__ = [
    "FragmemError",
    "Index",
    "build_chat_index",
    "build_code_index",
    "build_story_index",
    "cosine_similarity",
    "environment_scores",
    "retrieve",
    "run_cli",
    "split_code",
    "split_story",
    "top_k",
]
