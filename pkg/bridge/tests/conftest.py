import pytest

# vocabulary of the tiny local checkpoint; windows built from these
# words stay single-sub-token, everything else maps to <unk>
TINY_WORDS = [
    "for", "(", ")", "int", "i", "=", "0", ";", "<", ">", "n", "++", "{",
    "}", "total", "count", "step", "+", "-", "*", "value", "result", "if",
    "return", "x", "y", "1", "2", "while", "==", ".", ",", "new", "this",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """Build and save a small randomly initialized fill-mask checkpoint.

    Word-level tokenizer, 2-layer encoder, 70 position slots: big enough
    to answer real windows, small enough that a 100-token window
    overflows the encoder (exercising the truncation error path).
    """
    torch = pytest.importorskip("torch")
    pytest.importorskip("tokenizers")
    transformers = pytest.importorskip("transformers")
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import WhitespaceSplit

    path = tmp_path_factory.mktemp("tiny-mlm")
    vocab = {"<s>": 0, "<pad>": 1, "</s>": 2, "<unk>": 3, "<mask>": 4}
    for word in TINY_WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = WhitespaceSplit()
    fast = transformers.PreTrainedTokenizerFast(
        tokenizer_object=tok, bos_token="<s>", eos_token="</s>",
        cls_token="<s>", sep_token="</s>", pad_token="<pad>",
        unk_token="<unk>", mask_token="<mask>")
    fast.save_pretrained(path)

    torch.manual_seed(7)
    config = transformers.RobertaConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64,
        max_position_embeddings=70, pad_token_id=1, bos_token_id=0,
        eos_token_id=2)
    model = transformers.RobertaForMaskedLM(config)
    model.save_pretrained(path)
    return str(path)
