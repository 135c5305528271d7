"""HR-pQCT osteoporosis analysis pipeline.

Library plus batch CLI covering intensity standardization, segmentation
objectives and metrics, anatomical mask post-processing, soft-tissue
subdivision, a 939-feature radiomics engine, three-stage feature
selection, six classifiers with grouped cross-validation, and
patient-level logistic inference, validated end-to-end on synthetic
phantoms.
"""

__version__ = "0.1.0"
