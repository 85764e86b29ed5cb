"""Few-shot per-frame video object recognition, personalized per user.

Clean videos of a user's objects are sampled into clips, filtered for
frames with no visible content, embedded, and averaged into per-class
prototypes which a set-to-set transformer block then refines. Clutter
videos are classified frame by frame against those prototypes with a
causal sliding window and cosine similarity.
"""

__version__ = "0.1.0"
