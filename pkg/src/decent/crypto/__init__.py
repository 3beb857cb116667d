from .abe import (
    ContactKey,
    DecryptionError,
    MasterKey,
    PolicyCiphertext,
    PolicyUnsatisfied,
    ProxyRefused,
    ProxyShareState,
    ProxyState,
    ProxyUnavailable,
    PublicParams,
    RevokedError,
    ThresholdProxy,
    decrypt,
    decrypt_with_master,
    delegate,
    encrypt,
    issue_key,
    keygen_master,
    proxy_transform,
    revoke,
    split_proxy,
)
from .group import DEFAULT_GROUP, Group, SeededRng, SystemRng, get_group
from .primitives import (
    AuthenticationError,
    CryptoError,
    sign,
    signature_keypair,
    sym_open,
    sym_seal,
    verify,
)
