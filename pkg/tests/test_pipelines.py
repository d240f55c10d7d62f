import os
import tempfile
import unittest
from unittest.mock import patch

from lnrm_codec.evaluation.corpus import CorpusSpec, write_corpus
from lnrm_codec.evaluation.curves import read_curves_csv
from lnrm_codec.evaluation.report import ReportTable, parse_variants
from pipelines import run_report_pipeline, run_sweep_pipeline

QPS = (22, 28, 34, 40)


class TestSweepPipeline(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.image = write_corpus(self.tmp.name, CorpusSpec(count=1, width=32, height=32, seed=5))[0]

    def tearDown(self):
        self.tmp.cleanup()

    def test_writes_csv_named_after_file(self):
        out = os.path.join(self.tmp.name, "curves.csv")
        curves = run_sweep_pipeline(self.image, parse_variants("sse,lnrm:0.5"), QPS, out_path=out)

        self.assertEqual([c.variant for c in curves], ["sse", "lnrm:0.5"])
        loaded = read_curves_csv(out)
        self.assertEqual({c.image for c in loaded}, {"ugc_000"})
        self.assertEqual([len(c) for c in loaded], [4, 4])

    def test_no_output_path(self):
        curves = run_sweep_pipeline(self.image, parse_variants("sse"), (28, 34))
        self.assertEqual(len(curves), 1)
        self.assertFalse(os.path.exists(os.path.join(self.tmp.name, "curves.csv")))


class TestReportPipeline(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.corpus = os.path.join(self.tmp.name, "corpus")
        self.results = os.path.join(self.tmp.name, "results")

    def tearDown(self):
        self.tmp.cleanup()

    def test_end_to_end(self):
        write_corpus(self.corpus, CorpusSpec(count=2, width=32, height=32))
        table = run_report_pipeline(self.corpus, parse_variants("lnrm:1"), QPS, output_dir=self.results)

        self.assertEqual([r.image for r in table.per_image("lnrm:1")], ["ugc_000", "ugc_001"])
        curves = read_curves_csv(os.path.join(self.results, "curves.csv"))
        self.assertEqual(sorted((c.image, c.variant) for c in curves),
                         [("ugc_000", "lnrm:1"), ("ugc_000", "sse"), ("ugc_001", "lnrm:1"), ("ugc_001", "sse")])
        with open(os.path.join(self.results, "report.csv")) as f:
            self.assertEqual(f.read(), table.to_csv())

    @patch('lnrm_codec.evaluation.pipeline.report')
    @patch('lnrm_codec.evaluation.pipeline.write_corpus')
    def test_generates_missing_corpus(self, mock_write_corpus, mock_report):
        mock_report.return_value = (ReportTable(("psnr_db",), []), [])

        run_report_pipeline(self.corpus, output_dir=self.results)

        mock_write_corpus.assert_called_once_with(self.corpus, CorpusSpec())
        variants = mock_report.call_args[0][1]
        self.assertEqual([v.label for v in variants], ["sse", "lnrm:2", "lnrm:1", "lnrm:0.5"])
        self.assertTrue(os.path.exists(os.path.join(self.results, "report.csv")))

    @patch('lnrm_codec.evaluation.pipeline.get_output_dir')
    @patch('lnrm_codec.evaluation.pipeline.report')
    def test_default_output_dir(self, mock_report, mock_output_dir):
        os.makedirs(self.corpus)
        mock_report.return_value = (ReportTable(("psnr_db",), []), [])
        mock_output_dir.return_value = self.results

        run_report_pipeline(self.corpus)

        mock_output_dir.assert_called_once_with("results")
        self.assertTrue(os.path.exists(os.path.join(self.results, "curves.csv")))


if __name__ == '__main__':
    unittest.main()
