"""Transactional smart-contract toolkit."""
