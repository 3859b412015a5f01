/** reviewer/v1 message shapes (fields flat beside the envelope). */
export {};
