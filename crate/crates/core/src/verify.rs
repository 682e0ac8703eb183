//! Cross-module consistency suite (acceptance criteria).
