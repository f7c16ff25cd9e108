"""Toolkit for synthesizing unanswerable video-QA data and evaluating
answerability alignment of black-box chat models."""

__version__ = "0.1.0"
