"""Hand-written projections of the BuyItem and StreamIt examples."""
from o3.syntax import App, Branch, Choose, If, Option, PCall, Recv, Send, SetVar, Val, Var
from o3.tokens import PLACEHOLDER as T

BUYITEM_DECLS = {
    "BuyItem__s": (("b",), (), (
        Recv("itemID", 1, T),
        SetVar("item", App("sell", (Var("itemID"),))),
        Send("b", 3, T, Var("item")),
    )),
    "BuyItem__b": (("s",), ("itemID",), (
        Send("s", 1, T, Var("itemID")),
        Recv("item", 3, T),
    )),
}
BUYITEM_NET = {
    "seller": (PCall("BuyItem__s", ("buyer1",), (), 4, ()), PCall("BuyItem__s", ("buyer2",), (), 5, ())),
    "buyer1": (PCall("BuyItem__b", ("seller",), (Val(123),), 4, ()),),
    "buyer2": (PCall("BuyItem__b", ("seller",), (Val(543),), 5, ()),),
}

STREAMIT_DECLS = {
    "StreamIt__p": (("c",), (), (
        Send("c", 1, T, App("produce", ())),
        If(App(">", (App("itemsLeft", ()), Val(0))),
           (Choose("c", 4, T, "MORE"), PCall("StreamIt__p", ("c",), (), 5, T)),
           (Choose("c", 6, T, "DONE"),)),
    )),
    "StreamIt__c": (("p",), (), (
        Recv("x", 1, T),
        SetVar("z", App("consume", (Var("x"),))),
        Branch((Option(4, T, "MORE", (PCall("StreamIt__c", ("p",), (), 5, T),)),
                Option(6, T, "DONE", ()))),
    )),
}
STREAMIT_NET = {
    "p1": (PCall("StreamIt__p", ("c",), (), 7, ()),),
    "p2": (PCall("StreamIt__p", ("c",), (), 8, ()),),
    "c": (PCall("StreamIt__c", ("p1",), (), 7, ()), PCall("StreamIt__c", ("p2",), (), 8, ())),
}

GOLDEN = {"buyitem": (BUYITEM_DECLS, BUYITEM_NET), "streamit": (STREAMIT_DECLS, STREAMIT_NET)}


def projected(prog):
    """Declarations and network of a projection, block-normalized."""
    from o3.epp import project_program
    from o3.syntax import normalize_proc
    pdecls, net = project_program(prog)
    decls = {d.name: (d.roles, d.params, normalize_proc(d.body)) for d in pdecls}
    return decls, {p: normalize_proc(P) for p, P in net.items()}
