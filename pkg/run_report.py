from lnrm_codec.lib.utils import setup_logging
from pipelines import run_report_pipeline
import sys

if __name__ == "__main__":
    setup_logging()
    corpus_dir = sys.argv[1] if len(sys.argv) > 1 else "corpus"
    run_report_pipeline(corpus_dir)
